//! Output formats: human table, CSV, and a machine-readable key-value block.
//! Probabilities print in 6-significant-digit scientific notation, plus full
//! precision on request.

use std::io::Write;

use patdist_core::CountDistribution;

use crate::FormatArg;

pub struct Report {
    pub pattern: String,
    pub alphabet: String,
    pub requested_method: String,
    pub order: usize,
    pub mu_inexact: bool,
    pub automaton_states: usize,
    pub chain_states: usize,
    pub final_states: usize,
    pub nnz: usize,
    pub seq_len: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub build_seconds: f64,
    pub dist: CountDistribution,
    pub full_precision: bool,
}

impl Report {
    fn meta_rows(&self) -> Vec<(String, String)> {
        let mut rows = vec![
            ("pattern".into(), self.pattern.clone()),
            ("alphabet".into(), self.alphabet.clone()),
            ("order".into(), self.order.to_string()),
            (
                "method".into(),
                if self.requested_method == "auto" {
                    format!("{} (auto)", self.dist.method)
                } else {
                    self.dist.method.clone()
                },
            ),
            (
                "mode".into(),
                // report the arithmetic actually used; some strategies are
                // float-only regardless of the request
                match self.dist.meta.precision_bits {
                    Some(bits) => format!("float ({bits}-bit)"),
                    None => "exact".into(),
                },
            ),
            ("length".into(), self.seq_len.to_string()),
            ("automaton-states".into(), self.automaton_states.to_string()),
            ("chain-states".into(), self.chain_states.to_string()),
            ("final-states".into(), self.final_states.to_string()),
            ("nonzeros".into(), self.nnz.to_string()),
        ];
        if self.mu_inexact {
            rows.push(("mu-inexact".into(), "true".into()));
        }
        let meta = &self.dist.meta;
        if let Some(gap) = meta.lambda_gap {
            rows.push(("one-minus-lambda".into(), format!("{gap:.6e}")));
        }
        if let Some(it) = meta.power_iterations {
            rows.push(("power-iterations".into(), it.to_string()));
        }
        if let Some(alpha) = meta.alpha {
            rows.push(("alpha".into(), alpha.to_string()));
        }
        if let Some(eta) = meta.eta {
            rows.push(("eta".into(), format!("{eta:e}")));
        }
        if let Some(res) = meta.residual {
            rows.push(("residual".into(), format!("{res:.3e}")));
        }
        if let Some((db, da)) = meta.degrees {
            rows.push(("fraction-degrees".into(), format!("{db}/{da}")));
        }
        if meta.fell_back_to_full {
            rows.push(("fell-back-to-full".into(), "true".into()));
        }
        rows.push(("build-seconds".into(), format!("{:.3}", self.build_seconds)));
        for (name, secs) in &meta.phases {
            rows.push((format!("phase-{name}-seconds"), format!("{secs:.3}")));
        }
        rows
    }
}

pub fn print_report(out: &mut impl Write, r: &Report, format: FormatArg) -> std::io::Result<()> {
    match format {
        FormatArg::Human => {
            for (k, v) in r.meta_rows() {
                writeln!(out, "{k:<22} {v}")?;
            }
            writeln!(out)?;
            let width = if r.full_precision { "probability (full)" } else { "" };
            writeln!(out, "{:<8} {:<16} {width}", "n", "probability")?;
            for n in r.n_min..=r.n_max {
                let p = r.dist.prob(n).expect("range checked");
                if r.full_precision {
                    writeln!(out, "{n:<8} {:<16} {}", p.sci(6), p.full())?;
                } else {
                    writeln!(out, "{n:<8} {}", p.sci(6))?;
                }
            }
        }
        FormatArg::Csv => {
            for (k, v) in r.meta_rows() {
                writeln!(out, "# {k}={v}")?;
            }
            if r.full_precision {
                writeln!(out, "n,probability,probability_full")?;
            } else {
                writeln!(out, "n,probability")?;
            }
            for n in r.n_min..=r.n_max {
                let p = r.dist.prob(n).expect("range checked");
                if r.full_precision {
                    writeln!(out, "{n},{},{}", p.sci(6), p.full())?;
                } else {
                    writeln!(out, "{n},{}", p.sci(6))?;
                }
            }
        }
        FormatArg::Kv => {
            for (k, v) in r.meta_rows() {
                writeln!(out, "{k} {v}")?;
            }
            for n in r.n_min..=r.n_max {
                let p = r.dist.prob(n).expect("range checked");
                if r.full_precision {
                    writeln!(out, "p {n} {} {}", p.sci(6), p.full())?;
                } else {
                    writeln!(out, "p {n} {}", p.sci(6))?;
                }
            }
        }
    }
    Ok(())
}
