use gate_core::encoders::{hash_index, oneblob_encode, oneblob_encode_wrapped};
use gate_core::mesh_colors::{classify, feature_count_per_triangle, locate, LatticeClass, LatticePoint};
use gate_core::training::selection_probabilities;
use proptest::prelude::*;

fn bary() -> impl Strategy<Value = [f32; 3]> {
    (0.0f32..1.0, 0.0f32..1.0).prop_map(|(a, b)| {
        let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
        [1.0 - a - b, a, b]
    })
}

proptest! {
    #[test]
    fn locate_weights_form_a_partition(b in bary(), r in 1u32..=32) {
        let (pts, w) = locate(b, r);
        prop_assert!(pts.iter().all(|p| p.is_valid(r)));
        prop_assert!(w.iter().all(|&x| x >= 0.0));
        prop_assert!((w.iter().sum::<f32>() - 1.0).abs() < 1e-6);
        // The weighted lattice positions reproduce the query.
        for c in 0..3 {
            let p: f64 = pts.iter().zip(w).map(|(p, w)| p.bary(r)[c] * w as f64).sum();
            prop_assert!((p - b[c] as f64).abs() < 1e-5, "component {c}: {p} vs {}", b[c]);
        }
    }

    #[test]
    fn classification_partitions_the_lattice(r in 1u32..=16) {
        let (mut v, mut e, mut i) = (0, 0, 0);
        for a in 0..=r {
            for b in 0..=(r - a) {
                match classify(LatticePoint::new(a, b), r) {
                    LatticeClass::Vertex(_) => v += 1,
                    LatticeClass::Edge { .. } => e += 1,
                    LatticeClass::Interior(_) => i += 1,
                }
            }
        }
        prop_assert_eq!(v + e + i, feature_count_per_triangle(r).unwrap());
        prop_assert_eq!(v, 3);
        prop_assert_eq!(e, 3 * (r - 1));
    }

    #[test]
    fn hash_index_stays_in_table(x in 0u32..4096, y in 0u32..4096, z in 0u32..4096, n in 1u32..4096, t in 1u32..(1 << 20)) {
        let cell = [x % (n + 1), y % (n + 1), z % (n + 1)];
        prop_assert!(hash_index(cell, n, t) < t);
    }

    #[test]
    fn oneblob_is_a_distribution(x in 0.0f32..=1.0, k in 2usize..32) {
        let mut out = vec![0.0; k];
        oneblob_encode_wrapped(x, &mut out);
        prop_assert!(out.iter().all(|&v| v >= 0.0));
        prop_assert!((out.iter().sum::<f32>() - 1.0).abs() < 1e-5);
        oneblob_encode(x, &mut out);
        prop_assert!(out.iter().all(|&v| v >= 0.0));
        let r = 1.0 / k as f32;
        if x >= r && x <= 1.0 - r {
            prop_assert!((out.iter().sum::<f32>() - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn selection_probabilities_sum_to_one(counts in prop::collection::vec(0u32..2000, 1..32)) {
        let p = selection_probabilities(&counts, 512);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Fewer training steps never means a lower chance.
        for a in 0..counts.len() {
            for b in 0..counts.len() {
                if counts[a].max(1) < counts[b].min(512) {
                    prop_assert!(p[a] >= p[b]);
                }
            }
        }
    }
}
