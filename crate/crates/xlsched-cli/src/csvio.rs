//! CSV shapes the tool writes and reads back.
//!
//! Files are plain comma-separated text with two conventions: leading `#`
//! lines carry free-form provenance comments, and every float is printed
//! with Rust's shortest round-trip formatting, so identical runs produce
//! byte-identical files and readers recover the exact written values.

use std::io::Write as _;
use std::path::Path;
use thiserror::Error;
use xlsched::SlotRecord;

/// Column order of a rate file; readers reject anything else.
pub const RATE_COLUMNS: [&str; 10] = [
    "slot",
    "user",
    "assigned_rate_bps",
    "served_bits",
    "queue_bits",
    "hol_s",
    "k_g_bits",
    "k_M_bits",
    "base_weight",
    "eff_weight",
];

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected header `{expected}`, got `{found}`")]
    Header {
        line: usize,
        expected: String,
        found: String,
    },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("missing row for slot {slot}, user {user}")]
    MissingCell { slot: u64, user: usize },
    #[error("duplicate row for slot {slot}, user {user}")]
    DuplicateCell { slot: u64, user: usize },
    #[error("rate file has no data rows")]
    Empty,
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CsvError + '_ {
    move |source| CsvError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// A comment block, a header row and float-valued data rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for comment in &self.comments {
            out.push_str("# ");
            out.push_str(comment);
            out.push('\n');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            debug_assert_eq!(row.len(), self.columns.len());
            let mut first = true;
            for value in row {
                if !first {
                    out.push(',');
                }
                first = false;
                out.push_str(&format!("{value}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, path: &Path) -> Result<(), CsvError> {
        std::fs::write(path, self.render()).map_err(io_error(path))
    }
}

/// Parses a table the shape [`Table::render`] produces: `#` comments, one
/// header row, float rows.
pub fn read_table(path: &Path) -> Result<Table, CsvError> {
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    let mut comments = Vec::new();
    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let number = index + 1;
        if let Some(comment) = line.strip_prefix('#') {
            comments.push(comment.trim_start().to_owned());
            continue;
        }
        match &columns {
            None => columns = Some(line.split(',').map(str::to_owned).collect()),
            Some(header) => {
                let row = line
                    .split(',')
                    .map(|cell| {
                        cell.parse::<f64>().map_err(|e| CsvError::Line {
                            line: number,
                            message: format!("bad float {cell:?}: {e}"),
                        })
                    })
                    .collect::<Result<Vec<f64>, CsvError>>()?;
                if row.len() != header.len() {
                    return Err(CsvError::Line {
                        line: number,
                        message: format!(
                            "expected {} cells, got {}",
                            header.len(),
                            row.len()
                        ),
                    });
                }
                rows.push(row);
            }
        }
    }
    Ok(Table {
        comments,
        columns: columns.ok_or(CsvError::Empty)?,
        rows,
    })
}

/// Writes one row per slot and user, users numbered from 1, in the
/// [`RATE_COLUMNS`] order.
pub fn write_rates(
    path: &Path,
    comments: &[String],
    records: &[SlotRecord],
) -> Result<(), CsvError> {
    let file = std::fs::File::create(path).map_err(io_error(path))?;
    let mut out = std::io::BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        for comment in comments {
            writeln!(out, "# {comment}")?;
        }
        writeln!(out, "{}", RATE_COLUMNS.join(","))?;
        for record in records {
            for user in 0..record.assigned_rate_bps.len() {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    record.slot,
                    user + 1,
                    record.assigned_rate_bps[user],
                    record.served_bits[user],
                    record.queue_bits[user],
                    record.hol_s[user],
                    record.k_g_bits[user],
                    record.k_m_bits[user],
                    record.base_weight[user],
                    record.eff_weight[user],
                )?;
            }
        }
        out.flush()
    };
    write().map_err(io_error(path))
}

/// The assigned-rate matrix recovered from a rate file.
#[derive(Debug, Clone, PartialEq)]
pub struct RatesFile {
    /// `rates[user][slot]`, users 0-indexed.
    pub rates: Vec<Vec<f64>>,
}

impl RatesFile {
    pub fn n_users(&self) -> usize {
        self.rates.len()
    }

    pub fn n_slots(&self) -> usize {
        self.rates.first().map_or(0, Vec::len)
    }
}

/// Reads back the `assigned_rate_bps` column of a rate file. Rows may come
/// in any order but every `(slot, user)` pair must appear exactly once.
pub fn read_rates(path: &Path) -> Result<RatesFile, CsvError> {
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    let expected = RATE_COLUMNS.join(",");
    let mut cells: Vec<(u64, usize, f64)> = Vec::new();
    let mut header_seen = false;
    let mut max_slot = 0u64;
    let mut max_user = 0usize;
    for (index, line) in text.lines().enumerate() {
        let number = index + 1;
        if line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line != expected {
                return Err(CsvError::Header {
                    line: number,
                    expected,
                    found: line.to_owned(),
                });
            }
            header_seen = true;
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |name: &str| {
            fields.next().ok_or_else(|| CsvError::Line {
                line: number,
                message: format!("missing column {name}"),
            })
        };
        let slot: u64 = next("slot")?.parse().map_err(|e| CsvError::Line {
            line: number,
            message: format!("bad slot: {e}"),
        })?;
        let user: usize = next("user")?.parse().map_err(|e| CsvError::Line {
            line: number,
            message: format!("bad user: {e}"),
        })?;
        if user == 0 {
            return Err(CsvError::Line {
                line: number,
                message: "users are numbered from 1".to_owned(),
            });
        }
        let rate: f64 = next("assigned_rate_bps")?
            .parse()
            .map_err(|e| CsvError::Line {
                line: number,
                message: format!("bad assigned_rate_bps: {e}"),
            })?;
        max_slot = max_slot.max(slot);
        max_user = max_user.max(user);
        cells.push((slot, user - 1, rate));
    }
    if cells.is_empty() {
        return Err(CsvError::Empty);
    }
    let n_slots = (max_slot + 1) as usize;
    let mut rates = vec![vec![f64::NAN; n_slots]; max_user];
    for (slot, user, rate) in cells {
        let cell = &mut rates[user][slot as usize];
        if !cell.is_nan() {
            return Err(CsvError::DuplicateCell { slot, user: user + 1 });
        }
        *cell = rate;
    }
    for (user, series) in rates.iter().enumerate() {
        for (slot, value) in series.iter().enumerate() {
            if value.is_nan() {
                return Err(CsvError::MissingCell {
                    slot: slot as u64,
                    user: user + 1,
                });
            }
        }
    }
    Ok(RatesFile { rates })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(slot: u64, rates: &[f64]) -> SlotRecord {
        let n = rates.len();
        SlotRecord {
            slot,
            assigned_rate_bps: rates.to_vec(),
            served_bits: vec![1.5; n],
            arrived_bits: vec![2.0; n],
            queue_bits: vec![0.5; n],
            hol_s: vec![0.05; n],
            k_g_bits: vec![-0.0; n],
            k_m_bits: vec![0.0; n],
            base_weight: vec![1.0; n],
            eff_weight: vec![1.0; n],
            degenerate: false,
        }
    }

    #[test]
    fn rates_round_trip_exactly() {
        let dir = std::env::temp_dir().join("xlsched-csvio-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rates.csv");
        let records = vec![
            record(0, &[0.1 + 0.2, 443e6]),
            record(1, &[1.0 / 3.0, 2.0f64.sqrt()]),
        ];
        write_rates(&path, &["hand-made".to_owned()], &records).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# hand-made\nslot,user,assigned_rate_bps"));

        let back = read_rates(&path).unwrap();
        assert_eq!(back.n_users(), 2);
        assert_eq!(back.n_slots(), 2);
        assert_eq!(back.rates[0], vec![0.1 + 0.2, 1.0 / 3.0]);
        assert_eq!(back.rates[1], vec![443e6, 2.0f64.sqrt()]);
    }

    #[test]
    fn rate_reader_rejects_wrong_headers_and_holes() {
        let dir = std::env::temp_dir().join("xlsched-csvio-test");
        std::fs::create_dir_all(&dir).unwrap();

        let path = dir.join("bad-header.csv");
        std::fs::write(&path, "slot,user,rate\n0,1,5\n").unwrap();
        assert!(matches!(
            read_rates(&path).unwrap_err(),
            CsvError::Header { line: 1, .. }
        ));

        let path = dir.join("hole.csv");
        let header = RATE_COLUMNS.join(",");
        let row = |slot: u64, user: usize| {
            format!("{slot},{user},1,0,0,0,0,0,0,0")
        };
        std::fs::write(
            &path,
            format!("{header}\n{}\n{}\n{}\n", row(0, 1), row(0, 2), row(1, 1)),
        )
        .unwrap();
        assert!(matches!(
            read_rates(&path).unwrap_err(),
            CsvError::MissingCell { slot: 1, user: 2 }
        ));

        let path = dir.join("dupe.csv");
        std::fs::write(&path, format!("{header}\n{}\n{}\n", row(0, 1), row(0, 1))).unwrap();
        assert!(matches!(
            read_rates(&path).unwrap_err(),
            CsvError::DuplicateCell { slot: 0, user: 1 }
        ));
    }

    #[test]
    fn tables_round_trip_through_render() {
        let dir = std::env::temp_dir().join("xlsched-csvio-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("table.csv");
        let table = Table {
            comments: vec!["first".to_owned(), "second".to_owned()],
            columns: vec!["x".to_owned(), "user1".to_owned(), "mean".to_owned()],
            rows: vec![vec![1.0, 0.25, 0.25], vec![1.5, 1.0 / 7.0, 1.0 / 7.0]],
        };
        table.write_to(&path).unwrap();
        let back = read_table(&path).unwrap();
        assert_eq!(back, table);
    }
}
