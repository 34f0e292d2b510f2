use std::path::Path;

use super::{CalibError, CggDataset, CggRow, GridCalibration, IvDataset, IvRow};
use crate::device::Polarity;
use crate::grid::DesignPoint;

fn csv_err(path: &Path, message: impl ToString) -> CalibError {
    CalibError::Csv {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>, CalibError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let got: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    if got != header {
        return Err(csv_err(
            path,
            format!("expected header `{}`", header.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let vals = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| csv_err(path, format!("row {}: {e}", i + 2)))?;
        rows.push(vals);
    }
    Ok(rows)
}

/// Reads `vg,vd,id`. Polarity follows the sign of the drain biases.
pub fn read_iv_csv(path: &Path, point: DesignPoint, vdd: f64) -> Result<IvDataset, CalibError> {
    let rows: Vec<IvRow> = read_rows(path, &["vg", "vd", "id"])?
        .into_iter()
        .map(|v| IvRow {
            vg: v[0],
            vd: v[1],
            id: v[2],
        })
        .collect();
    let polarity = if rows.iter().any(|r| r.vd < 0.0) {
        Polarity::P
    } else {
        Polarity::N
    };
    let ds = IvDataset {
        point,
        vdd,
        polarity,
        rows,
    };
    ds.validate()?;
    Ok(ds)
}

pub fn read_cgg_csv(
    path: &Path,
    point: DesignPoint,
    polarity: Polarity,
) -> Result<CggDataset, CalibError> {
    let rows = read_rows(path, &["vg", "cgg"])?
        .into_iter()
        .map(|v| CggRow {
            vg: v[0],
            cgg: v[1],
        })
        .collect();
    Ok(CggDataset {
        point,
        polarity,
        rows,
    })
}

pub fn write_iv_csv(path: &Path, data: &IvDataset) -> Result<(), CalibError> {
    let mut out = String::from("vg,vd,id\n");
    for r in &data.rows {
        out.push_str(&format!("{},{},{:e}\n", r.vg, r.vd, r.id));
    }
    std::fs::write(path, out).map_err(|e| csv_err(path, e))
}

pub fn write_cgg_csv(path: &Path, data: &CggDataset) -> Result<(), CalibError> {
    let mut out = String::from("vg,cgg\n");
    for r in &data.rows {
        out.push_str(&format!("{},{:e}\n", r.vg, r.cgg));
    }
    std::fs::write(path, out).map_err(|e| csv_err(path, e))
}

pub fn write_fit_csv(path: &Path, cal: &GridCalibration) -> Result<(), CalibError> {
    std::fs::write(path, cal.fit_csv()).map_err(|e| csv_err(path, e))
}
