//! One-dimensional local search.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of `f` on `[lo, hi]`.
///
/// Returns the best point evaluated (including both ends), so the result is
/// never worse than `f(lo)` or `f(hi)` even when `f` is not unimodal.
pub(crate) fn golden_section_max<E, F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<(f64, f64), E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let mut best = (lo, f(lo)?);
    let f_hi = f(hi)?;
    if f_hi > best.1 {
        best = (hi, f_hi);
    }

    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    // Bounded so that a degenerate tolerance cannot spin forever.
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d)?;
        }
        for (x, v) in [(c, fc), (d, fd)] {
            if v > best.1 {
                best = (x, v);
            }
        }
    }
    Ok(best)
}
