use std::path::Path;

use super::{ExpansionError, PrereqFlags};

/// One measured remainder against its theoretical bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub variant: String,
    pub leading_term_norm: f64,
    pub remainder_norm: f64,
    pub bound_value: f64,
    /// `remainder_norm <= bound_value`.
    pub bound_holds: bool,
    /// `None` when the bound has no prerequisites beyond its inputs.
    pub prerequisite_flags: Option<PrereqFlags>,
}

impl ResidualReport {
    pub fn new(
        variant: impl Into<String>,
        leading: f64,
        remainder: f64,
        bound: f64,
        flags: Option<PrereqFlags>,
    ) -> Self {
        Self {
            variant: variant.into(),
            leading_term_norm: leading,
            remainder_norm: remainder,
            bound_value: bound,
            bound_holds: remainder <= bound,
            prerequisite_flags: flags,
        }
    }

    /// Whether the bound is asserted rather than informational.
    pub fn asserted(&self) -> bool {
        self.prerequisite_flags.is_none_or(|f| f.all())
    }

    /// A failed assertion: prerequisites hold but the bound does not.
    pub fn violated(&self) -> bool {
        self.asserted() && !self.bound_holds
    }
}

fn flag(v: Option<bool>) -> String {
    v.map(|b| b.to_string()).unwrap_or_default()
}

/// CSV with header `variant,leading,remainder,bound,holds,flag_dltwb,flag_d12r,flag_dinf`.
pub fn write_residual_csv(path: &Path, reports: &[ResidualReport]) -> Result<(), ExpansionError> {
    let file = std::fs::File::create(path).map_err(|e| ExpansionError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    write_residual_records(file, reports).map_err(|message| ExpansionError::Io {
        path: path.display().to_string(),
        message,
    })
}

/// [`write_residual_csv`] to any writer.
pub fn write_residual_records<W: std::io::Write>(
    out: W,
    reports: &[ResidualReport],
) -> Result<(), String> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| e.to_string();
    w.write_record([
        "variant",
        "leading",
        "remainder",
        "bound",
        "holds",
        "flag_dltwb",
        "flag_d12r",
        "flag_dinf",
    ])
    .map_err(err)?;
    for r in reports {
        let f = r.prerequisite_flags;
        w.write_record([
            r.variant.clone(),
            format!("{:.16e}", r.leading_term_norm),
            format!("{:.16e}", r.remainder_norm),
            format!("{:.16e}", r.bound_value),
            r.bound_holds.to_string(),
            flag(f.map(|f| f.dltwb)),
            flag(f.map(|f| f.d12r)),
            flag(f.map(|f| f.dinf)),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holds_is_exact_comparison() {
        assert!(ResidualReport::new("x", 1.0, 0.5, 0.5, None).bound_holds);
        assert!(!ResidualReport::new("x", 1.0, 0.5 + 1e-16, 0.5, None).bound_holds);
        let r = ResidualReport::new("x", 1.0, 2.0, 1.0, Some(PrereqFlags::none_hold()));
        assert!(!r.asserted() && !r.violated());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let flags = PrereqFlags {
            dltwb: true,
            d12r: false,
            dinf: true,
        };
        write_residual_csv(
            &p,
            &[
                ResidualReport::new("fisher", 1.0, 0.1, 0.2, Some(flags)),
                ResidualReport::new("bias", 1.0, 0.0, 0.0, None),
            ],
        )
        .unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "variant,leading,remainder,bound,holds,flag_dltwb,flag_d12r,flag_dinf"
        );
        assert!(lines[1].starts_with("fisher,") && lines[1].ends_with(",true,true,false,true"));
        assert!(lines[2].ends_with(",true,,,"));
    }
}
