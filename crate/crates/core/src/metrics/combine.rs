use crate::error::{Error, Result};

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidValue(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(())
}

/// Harmonic mean `2 PQ TQ / (PQ + TQ)`, zero when both are zero.
pub fn compute_pat(pq: f64, tq: f64) -> Result<f64> {
    check_unit("PQ", pq)?;
    check_unit("TQ", tq)?;
    if pq + tq == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * pq * tq / (pq + tq))
}

/// Geometric mean `sqrt(AQ SQ)`.
pub fn compute_stq(aq: f64, sq: f64) -> Result<f64> {
    check_unit("AQ", aq)?;
    check_unit("SQ", sq)?;
    Ok((aq * sq).sqrt())
}
