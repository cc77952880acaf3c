use std::io::Write;
use std::path::Path;

use super::{AoError, AoTrace};
use crate::tol;

/// Geometric mean of successive ratios of `norms` after `burn_in` entries.
///
/// Ratios stop at the first norm at or below `RATE_FLOOR`; if none remain
/// the sequence has already converged and the rate is 0.
pub fn estimate_rate(norms: &[f64], burn_in: usize) -> Result<f64, AoError> {
    estimate_rate_with_floor(norms, burn_in, tol::RATE_FLOOR)
}

pub fn estimate_rate_with_floor(norms: &[f64], burn_in: usize, floor: f64) -> Result<f64, AoError> {
    let tail = norms.get(burn_in..).unwrap_or(&[]);
    if tail.len() < 3 {
        return Err(AoError::InsufficientSteps {
            needed: 3,
            got: tail.len(),
        });
    }
    let mut log_sum = 0.0;
    let mut count = 0usize;
    for w in tail.windows(2) {
        if w[0] <= floor || w[1] <= floor {
            break;
        }
        log_sum += (w[1] / w[0]).ln();
        count += 1;
    }
    if count == 0 {
        return Ok(0.0);
    }
    Ok((log_sum / count as f64).exp())
}

/// Writes `step,theta_err,nui_err,eps_norm,alpha_norm`; fields that do not
/// exist at a step are left empty.
pub fn write_trace_csv(path: &Path, trace: &AoTrace) -> Result<(), AoError> {
    let io = |source| AoError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    let mut text = String::from("step,theta_err,nui_err,eps_norm,alpha_norm\n");
    for t in 0..trace.theta_err_norms.len() {
        text.push_str(&format!("{t},{:.16e}", trace.theta_err_norms[t]));
        if t == 0 {
            text.push_str(",,,\n");
            continue;
        }
        text.push_str(&format!(",{:.16e}", trace.nui_err_norms[t - 1]));
        match trace.eps_alpha.as_ref() {
            Some(ea) => {
                let (e, a) = &ea[t - 1];
                text.push_str(&format!(
                    ",{:.16e},{:.16e}\n",
                    e.dot(e).sqrt(),
                    a.dot(a).sqrt()
                ));
            }
            None => text.push_str(",,\n"),
        }
    }
    out.write_all(text.as_bytes()).map_err(io)?;
    out.flush().map_err(io)
}
