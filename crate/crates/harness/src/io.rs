//! CSV ingestion and persistence of `t,delta,x,y` datasets.

use std::io::{Read, Write};
use std::path::Path;

use releff_core::datagen::{Observation, Risk};
use releff_core::estimators::SurvivalData;

use crate::error::{HarnessError, Result};

/// Rows read from a CSV file. `delta` is present only if the file has the column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub delta: Option<Vec<Risk>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn survival_data(&self) -> Result<SurvivalData> {
        Ok(SurvivalData::new(self.t.clone(), self.x.clone(), self.y.clone())?)
    }

    /// Observations with risk labels; fails when the file had no `delta` column.
    pub fn observations(&self) -> Result<Vec<Observation>> {
        let delta = self
            .delta
            .as_ref()
            .ok_or_else(|| HarnessError::Config("baseline models need a `delta` column in the input".into()))?;
        Ok((0..self.len())
            .map(|i| Observation {
                t: self.t[i],
                delta: delta[i],
                x: self.x[i],
                y: self.y[i],
            })
            .collect())
    }
}

impl From<&[Observation]> for Dataset {
    fn from(obs: &[Observation]) -> Self {
        Self {
            t: obs.iter().map(|o| o.t).collect(),
            x: obs.iter().map(|o| o.x).collect(),
            y: obs.iter().map(|o| o.y).collect(),
            delta: Some(obs.iter().map(|o| o.delta).collect()),
        }
    }
}

fn ingest(line: u64, message: impl Into<String>) -> HarnessError {
    HarnessError::Ingest {
        line,
        message: message.into(),
    }
}

fn parse_number(field: &str, column: &str, line: u64) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| ingest(line, format!("column `{column}`: '{field}' is not a number")))?;
    if !v.is_finite() {
        return Err(ingest(line, format!("column `{column}`: value must be finite")));
    }
    Ok(v)
}

/// Reads a dataset with header `t,delta,x,y` (any column order, `delta` optional).
pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| ingest(1, e.to_string()))?.clone();
    let mut cols = [None; 4];
    for (i, name) in headers.iter().enumerate() {
        let slot = match name {
            "t" => 0,
            "delta" => 1,
            "x" => 2,
            "y" => 3,
            other => return Err(ingest(1, format!("unexpected column `{other}`; expected t,delta,x,y"))),
        };
        if cols[slot].replace(i).is_some() {
            return Err(ingest(1, format!("column `{name}` appears twice")));
        }
    }
    let [Some(ct), cd, Some(cx), Some(cy)] = cols else {
        return Err(ingest(1, "header must name the columns t, x and y"));
    };

    let mut data = Dataset {
        t: Vec::new(),
        x: Vec::new(),
        y: Vec::new(),
        delta: cd.map(|_| Vec::new()),
    };
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            ingest(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let t = parse_number(&record[ct], "t", line)?;
        if t <= 0.0 {
            return Err(ingest(line, format!("duration must be positive, got {t}")));
        }
        data.t.push(t);
        data.x.push(parse_number(&record[cx], "x", line)?);
        data.y.push(parse_number(&record[cy], "y", line)?);
        if let (Some(c), Some(d)) = (cd, data.delta.as_mut()) {
            let code: u8 = record[c]
                .parse()
                .map_err(|_| ingest(line, format!("column `delta`: '{}' is not 1 or 2", &record[c])))?;
            d.push(Risk::from_code(code).map_err(|e| ingest(line, e.to_string()))?);
        }
    }
    if data.is_empty() {
        return Err(ingest(2, "the file contains no observations"));
    }
    Ok(data)
}

pub fn read_dataset_file(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    read_dataset(std::io::BufReader::new(file))
}

/// Writes observations with header `t,delta,x,y`; values round-trip exactly.
pub fn write_observations<W: Write>(writer: W, obs: &[Observation]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "delta", "x", "y"])?;
    for o in obs {
        w.write_record([o.t.to_string(), o.delta.code().to_string(), o.x.to_string(), o.y.to_string()])?;
    }
    w.flush().map_err(|e| HarnessError::io("<output>", e))?;
    Ok(())
}

pub fn write_observations_file(path: &Path, obs: &[Observation]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_observations(std::io::BufWriter::new(file), obs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_any_column_order_and_optional_delta() {
        let d = read_dataset("x,t,y,delta\n0.5,1.25,-1,1\n0,2,3,2\n".as_bytes()).unwrap();
        assert_eq!(d.t, vec![1.25, 2.0]);
        assert_eq!(d.x, vec![0.5, 0.0]);
        assert_eq!(d.delta, Some(vec![Risk::Risk1, Risk::Risk2]));
        let d = read_dataset("t,x,y\n1,2,3\n".as_bytes()).unwrap();
        assert_eq!(d.delta, None);
        assert!(d.observations().is_err());
    }

    #[test]
    fn errors_name_the_line() {
        let mut text = String::from("t,delta,x,y\n");
        for _ in 0..5 {
            text.push_str("1.0,1,0.1,0.2\n");
        }
        text.push_str("abc,1,0.1,0.2\n");
        let err = read_dataset(text.as_bytes()).unwrap_err();
        assert!(matches!(err, HarnessError::Ingest { line: 7, .. }), "{err}");
        assert!(err.to_string().contains("line 7"));

        let err = read_dataset("t,delta,x,y\n1,1,0,0\n-1,1,0,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, HarnessError::Ingest { line: 3, .. }), "{err}");
        let err = read_dataset("t,delta,x,y\n1,3,0,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, HarnessError::Ingest { line: 2, .. }), "{err}");
        let err = read_dataset("t,delta,x,y\n1,1,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, HarnessError::Ingest { line: 2, .. }), "{err}");
    }

    #[test]
    fn rejects_bad_headers_and_empty_files() {
        assert!(read_dataset("t,x\n1,2\n".as_bytes()).is_err());
        assert!(read_dataset("t,x,y,z\n1,2,3,4\n".as_bytes()).is_err());
        assert!(read_dataset("t,x,y,t\n1,2,3,4\n".as_bytes()).is_err());
        assert!(read_dataset("t,x,y\n".as_bytes()).is_err());
    }

    #[test]
    fn write_then_read_round_trips() {
        let obs = vec![
            Observation {
                t: 0.1 + 0.2,
                delta: Risk::Risk1,
                x: -1.0 / 3.0,
                y: 1e-300,
            },
            Observation {
                t: 7.0,
                delta: Risk::Risk2,
                x: 2.5,
                y: -0.0,
            },
        ];
        let mut buf = Vec::new();
        write_observations(&mut buf, &obs).unwrap();
        let back = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(back.observations().unwrap(), obs);
    }
}
