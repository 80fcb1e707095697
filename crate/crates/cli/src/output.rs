//! JSON and CSV rendering of reports.

use std::io::Write;

use crate::config::{fmt_p, Format};
use crate::error::CliError;
use crate::report::RunReport;

pub const CSV_VERSION: u32 = 1;

pub fn to_json(rep: &RunReport) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(rep).map_err(|e| CliError::Output(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v}")
    }
}

fn header_lines(rep: &RunReport) -> Vec<String> {
    let mut lines = vec![format!("# beamlp {} csv v{CSV_VERSION}", rep.kind)];
    if let Some(e) = &rep.error {
        lines.push(format!("# error ({}): {}", e.kind, e.message));
    }
    for s in &rep.slopes {
        lines.push(format!(
            "# slope p={} {} expected {} tol {} pass={}",
            s.p,
            num(s.slope),
            num(s.expected),
            num(s.tol),
            s.pass
        ));
    }
    for c in rep.failed_checks() {
        lines.push(format!(
            "# failed {}: {} {} {}",
            c.name,
            num(c.value),
            c.relation,
            num(c.bound)
        ));
    }
    lines.push(format!("# pass={}", rep.pass));
    lines
}

/// The report's main table, preceded by `#` comment lines.
pub fn to_csv(rep: &RunReport) -> Result<String, CliError> {
    let mut buf: Vec<u8> = Vec::new();
    for l in header_lines(rep) {
        writeln!(buf, "{l}").map_err(|e| CliError::Output(e.to_string()))?;
    }
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let err = |e: csv::Error| CliError::Output(e.to_string());
        match rep.kind {
            "construct" => {
                w.write_record([
                    "p", "i", "norm_u", "norm_q", "baseline", "ratio", "chain_lower", "chain_ok",
                    "headline_ok", "converged",
                ])
                .map_err(err)?;
                for t in &rep.norms {
                    for r in &t.rows {
                        w.write_record([
                            t.p.clone(),
                            r.i.to_string(),
                            num(r.norm_u),
                            num(r.norm_q),
                            num(t.baseline),
                            num(r.ratio),
                            num(r.chain_lower),
                            r.chain_ok.to_string(),
                            r.headline_ok.to_string(),
                            r.converged.to_string(),
                        ])
                        .map_err(err)?;
                    }
                }
            }
            "sweep" => {
                let mut head = vec!["k".to_string(), "m".to_string(), "r_emp".to_string()];
                head.extend(rep.config.p.iter().map(|&p| format!("norm_p{}", fmt_p(p))));
                w.write_record(&head).map_err(err)?;
                for s in &rep.sweep {
                    let mut row = vec![s.k.to_string(), s.m.to_string(), num(s.r_emp)];
                    row.extend(s.min_norms.iter().map(|&v| num(v)));
                    w.write_record(&row).map_err(err)?;
                }
            }
            "localize" => {
                w.write_record([
                    "c", "i", "w", "mass_in", "mass_out", "beam_mass_in", "beam_mass_out", "bound_in",
                    "bound_out", "bound_out_l2", "pass",
                ])
                .map_err(err)?;
                for r in &rep.localization {
                    w.write_record([
                        num(r.c),
                        r.i.to_string(),
                        num(r.w),
                        num(r.mass_in),
                        num(r.mass_out),
                        num(r.beam_mass_in),
                        num(r.beam_mass_out),
                        num(r.bound_in),
                        num(r.bound_out),
                        num(r.bound_out_l2),
                        r.pass.to_string(),
                    ])
                    .map_err(err)?;
                }
            }
            "gram" => {
                w.write_record(["i", "j", "re", "im"]).map_err(err)?;
                if let Some(m) = &rep.matrix {
                    for (idx, z) in m.entries.iter().enumerate() {
                        w.write_record([
                            (idx / m.order).to_string(),
                            (idx % m.order).to_string(),
                            num(z[0]),
                            num(z[1]),
                        ])
                        .map_err(err)?;
                    }
                }
            }
            _ => {
                w.write_record(["name", "value", "relation", "bound", "pass"]).map_err(err)?;
                for c in &rep.checks {
                    w.write_record([
                        c.name.clone(),
                        num(c.value),
                        c.relation.to_string(),
                        num(c.bound),
                        c.pass.to_string(),
                    ])
                    .map_err(err)?;
                }
            }
        }
        w.flush().map_err(|e| CliError::Output(e.to_string()))?;
    }
    String::from_utf8(buf).map_err(|e| CliError::Output(e.to_string()))
}

pub fn render(rep: &RunReport, format: Format, matrix_text: Option<&str>) -> Result<String, CliError> {
    match format {
        Format::Json => to_json(rep),
        Format::Csv => to_csv(rep),
        Format::Text => match matrix_text {
            Some(t) => Ok(t.to_string()),
            None => Err(CliError::Usage(format!(
                "text output is only available for gram, not {}",
                rep.kind
            ))),
        },
    }
}
