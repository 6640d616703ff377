//! Interchange CSV: `series_id,t,x0..x{k-1}` followed by either `label`
//! (classification, repeated on every row) or `y0..y{m-1}` (regression).
//! Lines starting with `#` are comments.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use super::{DataError, Dataset, Series, Target};
use crate::model::Task;
use crate::tensor::Tensor;

pub const FORMAT_HEADER: &str = "# arn-csv 1";

pub fn load_csv(path: &Path) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Io { path: path.to_owned(), source })?;
    read_csv(file)
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
enum SeriesKey {
    Num(i64),
    Text(String),
}

fn key_of(id: &str) -> SeriesKey {
    id.parse().map_or_else(|_| SeriesKey::Text(id.to_owned()), SeriesKey::Num)
}

struct RawSeries {
    id: String,
    rows: BTreeMap<usize, (usize, Vec<f64>, Vec<f64>)>,
}

pub fn read_csv<R: Read>(reader: R) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| DataError::Format { line: 1, msg: e.to_string() })?
        .clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let id_col = col("series_id").ok_or_else(|| DataError::MissingColumn("series_id".into()))?;
    let t_col = col("t").ok_or_else(|| DataError::MissingColumn("t".into()))?;
    let xs: Vec<usize> = (0..).map_while(|k| col(&format!("x{k}"))).collect();
    if xs.is_empty() {
        return Err(DataError::MissingColumn("x0".into()));
    }
    let label_col = col("label");
    let ys: Vec<usize> = (0..).map_while(|k| col(&format!("y{k}"))).collect();
    let task = match (label_col.is_some(), ys.is_empty()) {
        (true, true) => Task::Classification,
        (false, false) => Task::Regression,
        (true, false) => {
            return Err(DataError::Format { line: 1, msg: "header has both label and y columns".into() });
        }
        (false, true) => return Err(DataError::MissingColumn("label or y0".into())),
    };
    let targets: Vec<usize> = match label_col {
        Some(c) => vec![c],
        None => ys.clone(),
    };

    let mut by_id: BTreeMap<SeriesKey, RawSeries> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| DataError::Format {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(DataError::Format {
                line,
                msg: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let num = |c: usize| -> Result<f64, DataError> {
            rec[c].parse::<f64>().map_err(|_| DataError::NonNumeric {
                line,
                column: header[c].to_owned(),
                value: rec[c].to_owned(),
            })
        };
        let id = rec[id_col].to_owned();
        let t = rec[t_col].parse::<usize>().map_err(|_| DataError::NonNumeric {
            line,
            column: "t".into(),
            value: rec[t_col].to_owned(),
        })?;
        let x = xs.iter().map(|&c| num(c)).collect::<Result<Vec<_>, _>>()?;
        let y = targets.iter().map(|&c| num(c)).collect::<Result<Vec<_>, _>>()?;
        let entry = by_id.entry(key_of(&id)).or_insert_with(|| RawSeries { id: id.clone(), rows: BTreeMap::new() });
        if let Some((prev, _, _)) = entry.rows.insert(t, (line, x, y)) {
            return Err(DataError::Format { line, msg: format!("series {id} repeats t={t} (first on line {prev})") });
        }
    }

    let mut series = Vec::with_capacity(by_id.len());
    let mut n_t = None;
    let mut n_classes = 0;
    for raw in by_id.into_values() {
        let len = raw.rows.len();
        if raw.rows.keys().next_back() != Some(&(len - 1)) {
            return Err(DataError::Ragged { series: raw.id, msg: "timesteps are not 0..n_t-1".into() });
        }
        match n_t {
            None => n_t = Some(len),
            Some(n) if n != len => {
                return Err(DataError::Ragged { series: raw.id, msg: format!("has {len} timesteps, expected {n}") });
            }
            _ => {}
        }
        let mut inputs = Tensor::zeros(len, xs.len());
        let mut values = Tensor::zeros(len, targets.len());
        let mut label: Option<(usize, f64)> = None;
        for (t, (line, x, y)) in &raw.rows {
            for (c, v) in x.iter().enumerate() {
                inputs.set(*t, c, *v);
            }
            for (c, v) in y.iter().enumerate() {
                values.set(*t, c, *v);
            }
            if task == Task::Classification {
                let v = y[0];
                if v < 0.0 || v.fract() != 0.0 {
                    return Err(DataError::Format { line: *line, msg: format!("label {v} is not a class index") });
                }
                match label {
                    None => label = Some((*line, v)),
                    Some((_, l)) if l != v => {
                        return Err(DataError::Format { line: *line, msg: format!("label changes within series {}", raw.id) });
                    }
                    _ => {}
                }
            }
        }
        let target = match label {
            Some((_, v)) => {
                n_classes = n_classes.max(v as usize + 1);
                Target::Class(v as usize)
            }
            None => Target::Values(values),
        };
        series.push(Series { id: raw.id, inputs, target });
    }
    if series.is_empty() {
        return Err(DataError::Format { line: 1, msg: "no data rows".into() });
    }
    let outputs = match task {
        Task::Classification => n_classes.max(2),
        Task::Regression => targets.len(),
    };
    Ok(Dataset { task, inputs: xs.len(), outputs, series })
}

pub fn write_csv<W: Write>(d: &Dataset, out: W) -> Result<(), DataError> {
    let to_io = |e: csv::Error| DataError::Format { line: 0, msg: e.to_string() };
    let mut out = out;
    writeln!(out, "{FORMAT_HEADER}").map_err(|e| DataError::Format { line: 0, msg: e.to_string() })?;
    let mut w = csv::Writer::from_writer(out);
    let mut head = vec!["series_id".to_owned(), "t".to_owned()];
    head.extend((0..d.inputs).map(|k| format!("x{k}")));
    match d.task {
        Task::Classification => head.push("label".into()),
        Task::Regression => head.extend((0..d.outputs).map(|k| format!("y{k}"))),
    }
    w.write_record(&head).map_err(to_io)?;
    for s in &d.series {
        for t in 0..s.timesteps() {
            let mut rec = vec![s.id.clone(), t.to_string()];
            rec.extend(s.inputs.row(t).iter().map(|v| format!("{v:?}")));
            match &s.target {
                Target::Class(c) => rec.push(c.to_string()),
                Target::Values(v) => rec.extend(v.row(t).iter().map(|v| format!("{v:?}"))),
            }
            w.write_record(&rec).map_err(to_io)?;
        }
    }
    w.flush().map_err(|e| DataError::Format { line: 0, msg: e.to_string() })?;
    Ok(())
}
