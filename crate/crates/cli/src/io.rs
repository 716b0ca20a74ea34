use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use crate::error::CliError;

pub type CsvOut = csv::Writer<Box<dyn Write>>;

/// Open `path` (stdout when `None`), write the `# ...` provenance line and the
/// header row.
pub fn csv_writer(path: Option<&Path>, provenance: &str, header: &[&str]) -> Result<CsvOut, CliError> {
    let mut sink: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Input(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    };
    writeln!(sink, "# {provenance}")?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(header)?;
    Ok(w)
}

/// Shortest round-trip representation, exponent form for very small or
/// large magnitudes; `nan`/`inf` spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x != 0.0 && (x.abs() < 1e-4 || x.abs() >= 1e15) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupRow {
    pub group_id: String,
    pub line: u64,
    pub rewards: Vec<f64>,
}

const GROUP_HEADER: &str = "group_id,r_1,...,r_G";

/// Read reward groups with header `group_id,r_1,...,r_G`. Trailing empty
/// cells are allowed so groups of different sizes can share one file.
pub fn read_groups<R: Read>(input: R) -> Result<Vec<GroupRow>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    // comments are skipped here rather than by the reader so positions keep
    // counting them
    let mut records = reader
        .records()
        .filter(|r| !matches!(r, Ok(rec) if rec.get(0).is_some_and(|c| c.starts_with('#'))));
    let header = match records.next() {
        None => return Err(CliError::Input(format!("missing header row `{GROUP_HEADER}`"))),
        Some(r) => r?,
    };
    let line_of = |r: &csv::StringRecord| r.position().map_or(0, |p| p.line());
    if header.get(0) != Some("group_id") || header.len() < 2 {
        return Err(CliError::Input(format!(
            "line {}: expected header `{GROUP_HEADER}`, found `{}`",
            line_of(&header),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    for (i, name) in header.iter().enumerate().skip(1) {
        if name != format!("r_{i}") {
            return Err(CliError::Input(format!(
                "line {}: header column {} should be `r_{i}`, found `{name}`",
                line_of(&header),
                i + 1
            )));
        }
    }
    let width = header.len();
    let mut rows = Vec::new();
    for record in records {
        let record = record?;
        let line = line_of(&record);
        if record.len() > width {
            return Err(CliError::Input(format!("line {line}: {} fields but the header has {width}", record.len())));
        }
        let group_id = record.get(0).unwrap_or("").to_string();
        if group_id.is_empty() {
            return Err(CliError::Input(format!("line {line}: empty group_id")));
        }
        let cells: Vec<&str> = record.iter().skip(1).collect();
        let used = cells.iter().rposition(|c| !c.is_empty()).map_or(0, |i| i + 1);
        let mut rewards = Vec::with_capacity(used);
        for (j, cell) in cells[..used].iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| CliError::Input(format!("line {line}: r_{} = '{cell}' is not a number", j + 1)))?;
            rewards.push(v);
        }
        rows.push(GroupRow { group_id, line, rewards });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_groups() {
        let body = "group_id,r_1,r_2,r_3,r_4\ng1,1,1,2,2\n# note\ng2,3,1,,\n";
        let rows = read_groups(body.as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].rewards, vec![1.0, 1.0, 2.0, 2.0]);
        assert_eq!(rows[1].rewards, vec![3.0, 1.0]);
        assert_eq!(rows[1].line, 4);
    }

    #[test]
    fn header_errors() {
        let empty = read_groups("".as_bytes()).unwrap_err().to_string();
        assert!(empty.contains("group_id,r_1"), "{empty}");
        assert!(read_groups("id,r_1\n".as_bytes()).is_err());
        assert!(read_groups("group_id,r_2\n".as_bytes()).is_err());
        let bad = read_groups("group_id,r_1,r_2\ng,1,x\n".as_bytes()).unwrap_err().to_string();
        assert!(bad.contains("line 2"), "{bad}");
    }

    #[test]
    fn number_format() {
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(f64::NAN), "nan");
        assert_eq!(num(-1.0), "-1");
        assert_eq!(num(1.5e-16), "1.5e-16");
        assert_eq!(num(-2e20), "-2e20");
        assert_eq!(num(0.0), "0");
    }
}
