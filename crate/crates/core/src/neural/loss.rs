use crate::Real;

/// Mean over the batch of the summed squared error, and its gradient
/// `2 (pred - target) / batch`.
pub fn l2_loss<T: Real>(pred: &[T], target: &[T], batch: usize) -> (T, Vec<T>) {
    assert_eq!(pred.len(), target.len(), "prediction/target length mismatch");
    let inv_b = T::one() / T::from_usize(batch.max(1)).expect("batch fits");
    let two = T::widen_f32(2.0);
    let mut loss = T::zero();
    let grad = pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let d = p - t;
            loss += d * d;
            two * d * inv_b
        })
        .collect();
    (loss * inv_b, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(l2_loss(&[0.3f64, 0.7], &[0.3, 0.7], 2), (0.0, vec![0.0, 0.0]));
        assert_eq!(l2_loss(&[1.0f64], &[0.0], 1), (1.0, vec![2.0]));
        assert_eq!(l2_loss(&[1.0f64, 0.0], &[0.0, 0.0], 2), (0.5, vec![1.0, 0.0]));
    }
}
