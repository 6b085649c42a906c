//! Sectioned text records: a `[meta]` block of `key = value` lines followed
//! by named blocks of comma-separated numbers.
//!
//! ```text
//! # risk scenario
//! [meta]
//! kind = scenario
//! d = 0.1,0.5,0.9
//! [C]
//! 4,1
//! 1,3
//! [H]
//! 1,-1
//! [h]
//! 0
//! [beta]
//! 0.5,0.5
//! ```
//!
//! Vectors are stored as a single row. Numbers are written in shortest
//! round-trip form, so write-then-read is exact.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::linalg::SymMatrix;
use crate::model::{FitOptions, LinearRestriction};
use crate::simulation::{BetaDesign, SimulationConfig};
use crate::table::real_full;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Record {
    pub meta: Vec<(String, String)>,
    pub blocks: Vec<(String, DMatrix<f64>)>,
}

fn rec_err(msg: impl Into<String>) -> Error {
    Error::Record(msg.into())
}

impl Record {
    pub fn new(kind: &str) -> Self {
        let mut r = Record::default();
        r.set("kind", kind);
        r
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.meta.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.meta.push((key.to_owned(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| rec_err(format!("missing meta key {key:?}")))
    }

    pub fn parse_key<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| rec_err(format!("cannot parse meta {key} = {raw:?}")))
    }

    pub fn parse_list(&self, key: &str) -> Result<Vec<f64>> {
        parse_row(self.require(key)?).map_err(|e| rec_err(format!("meta {key}: {e}")))
    }

    pub fn kind(&self) -> Option<&str> {
        self.get("kind")
    }

    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        match self.kind() {
            Some(k) if k == kind => Ok(()),
            other => Err(rec_err(format!(
                "expected a {kind} record, found {other:?}"
            ))),
        }
    }

    pub fn put_block(&mut self, name: &str, m: DMatrix<f64>) {
        self.blocks.retain(|(k, _)| k != name);
        self.blocks.push((name.to_owned(), m));
    }

    pub fn put_vector(&mut self, name: &str, v: &DVector<f64>) {
        self.put_block(name, DMatrix::from_row_slice(1, v.len(), v.as_slice()));
    }

    pub fn block(&self, name: &str) -> Option<&DMatrix<f64>> {
        self.blocks.iter().find(|(k, _)| k == name).map(|(_, m)| m)
    }

    pub fn require_block(&self, name: &str) -> Result<&DMatrix<f64>> {
        self.block(name)
            .ok_or_else(|| rec_err(format!("missing block [{name}]")))
    }

    /// A one-row block read back as a vector.
    pub fn vector(&self, name: &str) -> Result<Option<DVector<f64>>> {
        match self.block(name) {
            None => Ok(None),
            Some(m) if m.nrows() == 1 => Ok(Some(m.row(0).transpose())),
            Some(m) => Err(rec_err(format!(
                "block [{name}] must be a single row, found {} rows",
                m.nrows()
            ))),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("[meta]\n");
        for (k, v) in &self.meta {
            out.push_str(&format!("{k} = {v}\n"));
        }
        for (name, m) in &self.blocks {
            out.push_str(&format!("[{name}]\n"));
            for row in m.row_iter() {
                let line: Vec<String> = row.iter().map(|&v| real_full(v)).collect();
                out.push_str(&line.join(","));
                out.push('\n');
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rec = Record::default();
        let mut section: Option<String> = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();

        let flush = |rec: &mut Record, section: &Option<String>, rows: &mut Vec<Vec<f64>>| {
            if let Some(name) = section.as_deref().filter(|s| *s != "meta") {
                if rows.is_empty() {
                    return Err(rec_err(format!("block [{name}] is empty")));
                }
                let width = rows[0].len();
                if rows.iter().any(|r| r.len() != width) {
                    return Err(rec_err(format!("block [{name}] is ragged")));
                }
                let flat: Vec<f64> = rows.concat();
                rec.put_block(name, DMatrix::from_row_slice(rows.len(), width, &flat));
            }
            rows.clear();
            Ok(())
        };

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                flush(&mut rec, &section, &mut rows)?;
                section = Some(name.trim().to_owned());
                continue;
            }
            match section.as_deref() {
                None => {
                    return Err(rec_err(format!(
                        "line {}: data before any section",
                        lineno + 1
                    )))
                }
                Some("meta") => {
                    let (k, v) = line.split_once('=').ok_or_else(|| {
                        rec_err(format!("line {}: expected key = value", lineno + 1))
                    })?;
                    rec.set(k.trim(), v.trim());
                }
                Some(_) => rows.push(
                    parse_row(line).map_err(|e| rec_err(format!("line {}: {e}", lineno + 1)))?,
                ),
            }
        }
        flush(&mut rec, &section, &mut rows)?;
        Ok(rec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Comma-separated numbers; also accepted by the CLI for d grids and `h`.
pub fn parse_row(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .map_err(|_| format!("cannot parse {t:?} as a number"))
        })
        .collect()
}

/// Rows separated by `;`, entries by `,`: `"1,0,-2,1;1,-1,1,-1"`.
pub fn parse_matrix(s: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = s
        .split(';')
        .map(|r| parse_row(r).map_err(Error::InvalidParameter))
        .collect::<Result<_>>()?;
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::InvalidParameter(format!("ragged matrix {s:?}")));
    }
    Ok(DMatrix::from_row_slice(rows.len(), width, &rows.concat()))
}

fn put_restriction(rec: &mut Record, r: &LinearRestriction) {
    rec.put_block("H", r.matrix().clone());
    rec.put_vector("h", r.rhs());
}

/// Reads `[H]` and an optional `[h]` (zeros when absent).
pub fn restriction_from(rec: &Record) -> Result<Option<LinearRestriction>> {
    let Some(h_mat) = rec.block("H") else {
        return Ok(None);
    };
    let h_vec = rec
        .vector("h")?
        .unwrap_or_else(|| DVector::zeros(h_mat.nrows()));
    LinearRestriction::new(h_mat.clone(), h_vec).map(Some)
}

/// Inputs of a risk or dominance evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub info: SymMatrix,
    pub restriction: Option<LinearRestriction>,
    pub beta: DVector<f64>,
    pub d_grid: Vec<f64>,
}

impl ScenarioFile {
    pub const KIND: &'static str = "scenario";

    pub fn to_record(&self) -> Record {
        let mut rec = Record::new(Self::KIND);
        rec.set("m", self.info.dim());
        if !self.d_grid.is_empty() {
            let d: Vec<String> = self.d_grid.iter().map(|&v| real_full(v)).collect();
            rec.set("d", d.join(","));
        }
        rec.put_block("C", self.info.as_matrix().clone());
        if let Some(r) = &self.restriction {
            put_restriction(&mut rec, r);
        }
        rec.put_vector("beta", &self.beta);
        rec
    }

    pub fn from_record(rec: &Record) -> Result<Self> {
        rec.expect_kind(Self::KIND)?;
        let info = SymMatrix::new(rec.require_block("C")?.clone())?;
        let beta = rec
            .vector("beta")?
            .ok_or_else(|| rec_err("missing block [beta]"))?;
        let d_grid = if rec.get("d").is_some() {
            rec.parse_list("d")?
        } else {
            Vec::new()
        };
        Ok(ScenarioFile {
            info,
            restriction: restriction_from(rec)?,
            beta,
            d_grid,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_record(&Record::load(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_record().save(path)
    }
}

pub const SIMULATION_KIND: &str = "simulation";

/// Everything needed to replay a simulation run bit for bit.
pub fn simulation_record(config: &SimulationConfig) -> Record {
    let mut rec = Record::new(SIMULATION_KIND);
    rec.set("n", config.n);
    rec.set("p", config.p);
    rec.set("rho", real_full(config.rho));
    rec.set("reps", config.reps);
    rec.set("seed", config.seed);
    let d: Vec<String> = config.d_grid.iter().map(|&v| real_full(v)).collect();
    rec.set("d", d.join(","));
    let kinds: Vec<&str> = config.estimator_kinds.iter().map(|k| k.name()).collect();
    rec.set("estimators", kinds.join(","));
    rec.set(
        "beta",
        match config.beta_design {
            BetaDesign::Equal => "equal",
            BetaDesign::Random { project: true } => "random-projected",
            BetaDesign::Random { project: false } => "random",
        },
    );
    rec.set("fixed_design", config.fixed_design);
    rec.set("max_iter", config.fit.max_iter);
    rec.set("tol", real_full(config.fit.tol));
    rec.set("prob_clip", real_full(config.fit.prob_clip));
    put_restriction(&mut rec, &config.restriction);
    rec
}

pub fn parse_beta_design(s: &str) -> Result<BetaDesign> {
    match s {
        "equal" => Ok(BetaDesign::Equal),
        "random-projected" => Ok(BetaDesign::Random { project: true }),
        "random" => Ok(BetaDesign::Random { project: false }),
        other => Err(Error::InvalidParameter(format!(
            "unknown beta design {other:?} (equal, random-projected, random)"
        ))),
    }
}

pub fn simulation_config_from(rec: &Record) -> Result<SimulationConfig> {
    rec.expect_kind(SIMULATION_KIND)?;
    let estimator_kinds = rec
        .require("estimators")?
        .split(',')
        .map(|s| s.trim().parse::<EstimatorKind>())
        .collect::<Result<Vec<_>>>()?;
    let config = SimulationConfig {
        n: rec.parse_key("n")?,
        p: rec.parse_key("p")?,
        rho: rec.parse_key("rho")?,
        d_grid: rec.parse_list("d")?,
        reps: rec.parse_key("reps")?,
        seed: rec.parse_key("seed")?,
        restriction: restriction_from(rec)?.ok_or_else(|| rec_err("missing block [H]"))?,
        beta_design: parse_beta_design(rec.require("beta")?)?,
        fixed_design: rec.parse_key("fixed_design")?,
        estimator_kinds,
        fit: FitOptions {
            max_iter: rec.parse_key("max_iter")?,
            tol: rec.parse_key("tol")?,
            prob_clip: rec.parse_key("prob_clip")?,
            ..FitOptions::default()
        },
    };
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_matrix_rows() {
        let h = parse_matrix("1,0,-2,1;1,-1,1,-1").unwrap();
        assert_eq!(h, crate::simulation::h1().matrix().clone());
        assert!(parse_matrix("1,2;3").is_err());
        assert!(parse_matrix("1,x").is_err());
    }

    #[test]
    fn scenario_round_trip() {
        let s = ScenarioFile {
            info: SymMatrix::from_row_slice(2, &[4.0, 0.1 + 0.2, 0.1 + 0.2, 3.0]).unwrap(),
            restriction: Some(
                LinearRestriction::new(
                    DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
                    DVector::from_element(1, 0.25),
                )
                .unwrap(),
            ),
            beta: DVector::from_column_slice(&[1.0 / 3.0, -2.5e-7]),
            d_grid: vec![0.1, 0.99],
        };
        let text = s.to_record().to_text();
        let back = ScenarioFile::from_record(&Record::parse(&text).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn simulation_round_trip() {
        let mut c = SimulationConfig::table(50, 8, 0.999, 17, 2016).unwrap();
        c.beta_design = BetaDesign::Random { project: true };
        c.fixed_design = true;
        let text = simulation_record(&c).to_text();
        let back = simulation_config_from(&Record::parse(&text).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn malformed_records() {
        assert!(Record::parse("1,2\n").is_err());
        assert!(Record::parse("[meta]\nnonsense\n").is_err());
        assert!(Record::parse("[C]\n1,2\n3\n").is_err());
        assert!(Record::parse("[C]\n[beta]\n1\n").is_err());
        let rec = Record::parse("[meta]\nkind = other\n").unwrap();
        assert!(ScenarioFile::from_record(&rec).is_err());
    }
}
