//! File formats: surface and chart JSON, grid CSV, numeric formatting.

use std::path::Path;

use serde::Deserialize;
use serde_json::Value;
use zs_core::conformal::{Bump, ConformalFactor, FunnelChart};
use zs_core::surface::{build_cylinder, build_pants, MoebiusMap, PantsSpec, SurfaceModel};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceKindField {
    Cylinder,
    Pants,
    Generators,
}

/// `{ "kind", "lengths", "matrices", "genus", "funnels" }`, matrices row-major.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceFile {
    pub kind: SurfaceKindField,
    #[serde(default)]
    pub lengths: Vec<f64>,
    #[serde(default)]
    pub matrices: Vec<[f64; 4]>,
    pub genus: Option<u32>,
    pub funnels: Option<u32>,
}

impl SurfaceFile {
    pub fn build(&self) -> Result<SurfaceModel, CliError> {
        let want = |n: usize, what: &str| {
            if self.lengths.len() == n {
                Ok(())
            } else {
                Err(CliError::Input(format!(
                    "field `lengths`: {what} needs {n} length(s), got {}",
                    self.lengths.len()
                )))
            }
        };
        Ok(match self.kind {
            SurfaceKindField::Cylinder => {
                want(1, "a cylinder")?;
                build_cylinder(self.lengths[0])?
            }
            SurfaceKindField::Pants => {
                want(3, "a pair of pants")?;
                build_pants(PantsSpec::new(self.lengths[0], self.lengths[1], self.lengths[2])?)?
            }
            SurfaceKindField::Generators => {
                if self.matrices.is_empty() {
                    return Err(CliError::Input("field `matrices`: at least one generator is required".into()));
                }
                let genus = self.genus.ok_or_else(|| CliError::Input("missing field `genus`".into()))?;
                let funnels = self.funnels.ok_or_else(|| CliError::Input("missing field `funnels`".into()))?;
                let gens = self
                    .matrices
                    .iter()
                    .map(|m| MoebiusMap::new(m[0], m[1], m[2], m[3]))
                    .collect::<Result<Vec<_>, _>>()?;
                SurfaceModel::from_generators(gens, genus, funnels, self.lengths.clone())?
            }
        })
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn read_surface(path: &Path) -> Result<SurfaceModel, CliError> {
    parse_json::<SurfaceFile>(path)?.build()
}

/// Chart description for `invariants`; `phi` comes from a CSV grid or from
/// the parametric `bump`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartFile {
    pub length: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
    pub n_theta: usize,
    pub support: Option<[f64; 2]>,
    #[serde(default)]
    pub chi: i64,
    pub bump: Option<Bump>,
}

impl ChartFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        parse_json(path)
    }

    pub fn chart(&self) -> Result<FunnelChart, CliError> {
        Ok(FunnelChart::new(self.length, self.t_min, self.t_max, self.n_t, self.n_theta)?)
    }

    pub fn factor(&self, phi: Option<&Path>) -> Result<ConformalFactor, CliError> {
        let chart = self.chart()?;
        let support = self.support.map(|[a, b]| (a, b));
        match (phi, &self.bump) {
            (Some(p), _) => {
                let values = read_grid(p, chart.n_t, chart.n_theta)?;
                Ok(ConformalFactor::from_values(chart, values, support)?)
            }
            (None, Some(b)) => Ok(ConformalFactor::from_bump(chart, b)?),
            (None, None) => Err(CliError::Input("no phi grid given and field `bump` is absent".into())),
        }
    }
}

/// `rows x cols` numbers, one `t` row per line, no header.
pub fn read_grid(path: &Path, rows: usize, cols: usize) -> Result<Vec<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut values = Vec::with_capacity(rows * cols);
    let mut n_rows = 0;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if rec.len() != cols {
            return Err(CliError::Input(format!(
                "{}: row {} has {} values, expected {cols}",
                path.display(),
                i + 1,
                rec.len()
            )));
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Input(format!("{}: row {}, column {}: `{field}` is not a number", path.display(), i + 1, j + 1))
            })?;
            values.push(v);
        }
        n_rows += 1;
    }
    if n_rows != rows {
        return Err(CliError::Input(format!("{}: {n_rows} rows, expected {rows}", path.display())));
    }
    Ok(values)
}

/// 15 significant digits; plain decimal for moderate exponents.
pub fn fmt15(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.14e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let rounded: f64 = sci.parse().expect("float");
        trim_zeros(&format!("{:.*}", (14 - exp) as usize, rounded))
    } else {
        format!("{}e{exp}", trim_zeros(mant))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::Input(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| CliError::Input(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Replaces every float in `v` by its decimal string (used when the
/// requested precision exceeds what a JSON double carries).
pub fn floats_to_strings(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => Value::String(format!("{:.17e}", n.as_f64().unwrap_or(f64::NAN))),
        Value::Array(a) => Value::Array(a.into_iter().map(floats_to_strings).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, floats_to_strings(v))).collect()),
        other => other,
    }
}
