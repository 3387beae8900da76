//! On-disk artifacts of a run. CSV floats carry 9 significant digits;
//! `report.json` carries full precision.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::pipeline::RunOutput;

pub const SAMPLES: &str = "samples.csv";
pub const PROTOTYPES: &str = "prototypes.csv";
pub const TRANSITIONS: &str = "transitions.csv";
pub const PAIR_STATES: &str = "pair_states.csv";
pub const EMBEDDING: &str = "embedding.csv";
pub const CONTEXTS: &str = "contexts.csv";
pub const REPORT: &str = "report.json";
pub const CONFIG: &str = "config.json";

/// Fixed CSV headers. The embedding header depends on `k`; see [`embedding_header`].
pub const CSV_HEADERS: &[(&str, &str)] = &[
    (SAMPLES, "t,m,s,d,phi,e_id"),
    (PROTOTYPES, "id,m,s"),
    (TRANSITIONS, "from,to,count,prob"),
    (PAIR_STATES, "pair_id,from_proto,to_proto"),
    (CONTEXTS, "state_id,context_id"),
];

pub fn embedding_header(k: usize) -> String {
    let mut h = String::from("state_id");
    for i in 1..=k {
        let _ = write!(h, ",lambda_rank_{i}");
    }
    h
}

/// One named output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: &'static str,
    pub bytes: Vec<u8>,
}

/// Formats like C's `%.9g`.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (8 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv(header: &str, rows: impl Iterator<Item = String>) -> Vec<u8> {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out.into_bytes()
}

/// Renders every artifact of a run, in a fixed order.
pub fn render(run: &RunOutput) -> Result<Vec<Artifact>> {
    let mut out = Vec::with_capacity(8);

    let samples = run.log.records().iter().map(|r| {
        let e_id = r.latent_id.map_or(-1, |id| id as i64);
        format!(
            "{},{},{},{},{},{}",
            r.t,
            fmt_float(r.m),
            fmt_float(r.s),
            fmt_float(r.latent.d),
            fmt_float(r.latent.phi),
            e_id
        )
    });
    out.push(Artifact { name: SAMPLES, bytes: csv(CSV_HEADERS[0].1, samples) });

    let protos = run
        .prototypes
        .centers()
        .into_iter()
        .enumerate()
        .map(|(i, c)| format!("{i},{},{}", fmt_float(c.m), fmt_float(c.s)));
    out.push(Artifact { name: PROTOTYPES, bytes: csv(CSV_HEADERS[1].1, protos) });

    let t = &run.matrix;
    let n = t.n();
    let transitions = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| t.count(i, j) > 0)
        .map(|(i, j)| format!("{i},{j},{},{}", t.count(i, j), fmt_float(t.prob(i, j))));
    out.push(Artifact { name: TRANSITIONS, bytes: csv(CSV_HEADERS[2].1, transitions) });

    if let Some(lifted) = &run.lifted {
        let pairs = lifted.index.pairs().iter().enumerate().map(|(id, (a, b))| format!("{id},{a},{b}"));
        out.push(Artifact { name: PAIR_STATES, bytes: csv(CSV_HEADERS[3].1, pairs) });
    }

    let v = &run.embedding.v;
    let rows = run.embedding.visited.iter().map(|&state| {
        let mut line = state.to_string();
        for x in v.row(state).iter() {
            line.push(',');
            line.push_str(&fmt_float(*x));
        }
        line
    });
    out.push(Artifact { name: EMBEDDING, bytes: csv(&embedding_header(v.ncols()), rows) });

    let contexts = run
        .partition
        .assignment()
        .iter()
        .enumerate()
        .filter_map(|(state, c)| c.map(|c| format!("{state},{c}")));
    out.push(Artifact { name: CONTEXTS, bytes: csv(CSV_HEADERS[4].1, contexts) });

    let mut report = serde_json::to_string_pretty(&run.report()).map_err(|e| Error::Io(e.to_string()))?;
    report.push('\n');
    out.push(Artifact { name: REPORT, bytes: report.into_bytes() });

    let mut config = run.config.to_json();
    if !config.ends_with('\n') {
        config.push('\n');
    }
    out.push(Artifact { name: CONFIG, bytes: config.into_bytes() });

    Ok(out)
}

/// Writes all artifacts into `dir`, creating it if needed. On failure every
/// file written so far is removed.
pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let path = dir.join(a.name);
        if let Err(e) = fs::write(&path, &a.bytes) {
            // the failed file may exist partially
            let _ = fs::remove_file(&path);
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(e.into());
        }
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        let cases = [
            (1.0, "1"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333"),
            (2.0 / 3.0, "0.666666667"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-2.5, "-2.5"),
            (std::f64::consts::PI, "3.14159265"),
            (9.999999999, "10"),
            (999999999.7, "1e+09"),
            (0.0, "0"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_float(x), want, "{x}");
        }
    }

    #[test]
    fn nine_digits_round_trip_closely() {
        for &x in &[0.123456789123, 6.0 / 7.0, 1e-7 / 3.0, 4.0e12 / 7.0] {
            let y: f64 = fmt_float(x).parse().unwrap();
            assert!(((x - y) / x).abs() < 1e-8);
        }
    }

    #[test]
    fn failed_write_leaves_nothing() {
        let dir = std::env::temp_dir().join(format!("smcontext-artifacts-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(dir.join(CONTEXTS)).unwrap(); // a directory blocks this file
        let artifacts = vec![
            Artifact { name: SAMPLES, bytes: b"t\n".to_vec() },
            Artifact { name: CONTEXTS, bytes: b"x\n".to_vec() },
        ];
        assert!(write_all(&dir, &artifacts).is_err());
        assert!(!dir.join(SAMPLES).exists());
        fs::remove_dir_all(&dir).unwrap();
    }
}
