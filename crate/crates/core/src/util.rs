use rand::Rng;

/// Index of the largest value; entries within `tol` of the maximum count as
/// ties and one of them is chosen uniformly. A unique maximum consumes no
/// randomness.
pub fn argmax_random_tie<R: Rng + ?Sized>(values: &[f64], tol: f64, rng: &mut R) -> usize {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties = values.iter().filter(|&&v| v >= max - tol).count();
    let pick = if ties > 1 { rng.gen_range(0..ties) } else { 0 };
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= max - tol)
        .nth(pick)
        .map(|(i, _)| i)
        .expect("non-empty slice")
}

/// Indices attaining the maximum (within `tol`).
pub fn argmax_set(values: &[f64], tol: f64) -> Vec<usize> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= max - tol)
        .map(|(i, _)| i)
        .collect()
}
