//! CSV datasets and plot-data files.
//!
//! Every file is UTF-8 with LF line endings and `.` as the decimal
//! separator. Floats are written in the shortest form that parses back to
//! the same value, so a write/read cycle is bit-exact.

use std::path::Path;

use uic_core::{Dataset, Label, LabeledSample};

use crate::error::CliError;

/// Which columns hold the features and the label. Extra columns are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub features: Vec<String>,
    pub label: String,
}

impl CsvSchema {
    /// `x1..xd` and `y`, the layout [`write_samples`] produces.
    pub fn numbered(d: usize) -> Self {
        CsvSchema {
            features: (1..=d).map(|i| format!("x{i}")).collect(),
            label: "y".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    pub n_rows: usize,
    pub n_positive: usize,
    pub n_negative: usize,
}

/// One point of a curve aggregated over seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub mean: f64,
    /// Sample standard deviation over seeds; 0 for a single seed.
    pub std: f64,
    pub n_seeds: usize,
}

impl CurvePoint {
    /// Mean and sample standard deviation of `values`.
    pub fn aggregate(x: f64, values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        CurvePoint {
            x,
            mean,
            std,
            n_seeds: n,
        }
    }
}

/// Plot data in one of the two documented layouts.
#[derive(Debug, Clone, PartialEq)]
pub enum PlotData {
    /// Columns `x, mean, std, n_seeds`.
    Curve(Vec<CurvePoint>),
    /// Columns `x1, x2`.
    Boundary(Vec<[f64; 2]>),
}

/// Shortest round-trip decimal; plain notation in `[1e-4, 1e15)`, exponent otherwise.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Data(format!("{}: {other:?}", path.display())),
    }
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_plot_data(data: &PlotData, path: &Path) -> Result<(), CliError> {
    let finite = match data {
        PlotData::Curve(c) => c
            .iter()
            .all(|p| p.x.is_finite() && p.mean.is_finite() && p.std.is_finite()),
        PlotData::Boundary(b) => b.iter().flatten().all(|v| v.is_finite()),
    };
    if !finite {
        return Err(CliError::Data(format!("{}: plot data must be finite", path.display())));
    }
    match data {
        PlotData::Curve(c) => write_rows(
            path,
            &["x", "mean", "std", "n_seeds"],
            c.iter().map(|p| {
                vec![
                    format_float(p.x),
                    format_float(p.mean),
                    format_float(p.std),
                    p.n_seeds.to_string(),
                ]
            }),
        ),
        PlotData::Boundary(b) => write_rows(
            path,
            &["x1", "x2"],
            b.iter().map(|p| vec![format_float(p[0]), format_float(p[1])]),
        ),
    }
}

/// Writes `x1..xd,y` with `y ∈ {0, 1}`.
pub fn write_samples(data: &Dataset, path: &Path) -> Result<(), CliError> {
    let schema = CsvSchema::numbered(data.dim());
    let mut header: Vec<&str> = schema.features.iter().map(String::as_str).collect();
    header.push("y");
    write_rows(
        path,
        &header,
        data.iter().map(|s| {
            let mut r: Vec<String> = s.x.iter().map(|v| format_float(*v)).collect();
            r.push(s.y.as_u8().to_string());
            r
        }),
    )
}

fn parse_label(field: &str) -> Option<Label> {
    match field.trim() {
        "0" => Some(Label::Negative),
        "1" => Some(Label::Positive),
        other => match other.parse::<f64>() {
            Ok(v) if v == 0.0 => Some(Label::Negative),
            Ok(v) if v == 1.0 => Some(Label::Positive),
            _ => None,
        },
    }
}

/// Reads labeled samples; rows and columns in errors are 1-based, with the
/// header on row 1.
pub fn load_csv_dataset(path: &Path, schema: &CsvSchema) -> Result<LoadedDataset, CliError> {
    if schema.features.is_empty() {
        return Err(CliError::Data("schema declares no feature columns".into()));
    }
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CliError::Data(format!("{}: no column named `{name}`", path.display())))
    };
    let feature_idx = schema.features.iter().map(|f| find(f)).collect::<Result<Vec<_>, _>>()?;
    let label_idx = find(&schema.label)?;

    let mut samples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| csv_err(path, e))?;
        let cell = |j: usize| record.get(j).unwrap_or("");
        let x = feature_idx
            .iter()
            .map(|&j| {
                let field = cell(j).trim();
                match field.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(CliError::Data(format!(
                        "{}: row {row}, column {} (`{}`): cannot parse `{field}` as a finite real",
                        path.display(),
                        j + 1,
                        &headers[j]
                    ))),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let y = parse_label(cell(label_idx)).ok_or_else(|| {
            CliError::Data(format!(
                "{}: row {row}, column {} (`{}`): label `{}` is not binary (0 or 1)",
                path.display(),
                label_idx + 1,
                schema.label,
                cell(label_idx)
            ))
        })?;
        samples.push(LabeledSample::new(x, y));
    }
    if samples.is_empty() {
        return Err(CliError::Data(format!("{}: the file has no data rows", path.display())));
    }
    let n_rows = samples.len();
    let n_positive = samples.iter().filter(|s| s.y == Label::Positive).count();
    let dataset = Dataset::new(samples)?;
    Ok(LoadedDataset {
        dataset,
        n_rows,
        n_positive,
        n_negative: n_rows - n_positive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatted_floats_parse_back_exactly() {
        for v in [
            0.1,
            1e-300,
            -2.5e-7,
            123456.789,
            1e20,
            5e-324,
            f64::MAX,
            0.0,
            -0.0,
            1.0 / 3.0,
        ] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(format_float(0.25), "0.25");
        assert_eq!(format_float(1e-8), "1e-8");
    }

    #[test]
    fn aggregate_uses_sample_std() {
        let p = CurvePoint::aggregate(1.0, &[1.0, 2.0, 3.0]);
        assert_eq!((p.mean, p.std, p.n_seeds), (2.0, 1.0, 3));
        assert_eq!(CurvePoint::aggregate(0.0, &[4.0]).std, 0.0);
    }
}
