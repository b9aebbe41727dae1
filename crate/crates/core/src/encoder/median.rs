/// Weighted median of `(value, weight)` pairs: the smallest value at which
/// the cumulative weight reaches half the total. Reorders `pairs`.
/// Returns 0 for an empty or weightless input.
pub(crate) fn weighted_median(pairs: &mut [(f64, f64)]) -> f64 {
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    if pairs.is_empty() || total <= 0.0 {
        return 0.0;
    }
    let mut target = total / 2.0;
    let mut slice = pairs;
    loop {
        if slice.len() == 1 {
            return slice[0].0;
        }
        let mid = slice.len() / 2;
        slice.select_nth_unstable_by(mid, |a, b| a.0.total_cmp(&b.0));
        let left: f64 = slice[..mid].iter().map(|p| p.1).sum();
        if left >= target {
            slice = &mut slice[..mid];
        } else if left + slice[mid].1 >= target || mid + 1 == slice.len() {
            return slice[mid].0;
        } else {
            target -= left + slice[mid].1;
            slice = &mut slice[mid + 1..];
        }
    }
}
