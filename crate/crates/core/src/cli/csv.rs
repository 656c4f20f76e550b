use super::CliError;

/// 17 significant decimal digits, enough to round-trip any `f64`.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn opt_number(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        CsvTable {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Keeps only `keep`, in the order given.
    pub fn select(&self, keep: &[String]) -> Result<CsvTable, CliError> {
        let idx = keep
            .iter()
            .map(|c| {
                self.columns
                    .iter()
                    .position(|x| x == c.trim())
                    .ok_or_else(|| CliError::Usage(format!("unknown column '{c}'")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CsvTable {
            columns: idx.iter().map(|&i| self.columns[i].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| idx.iter().map(|&i| r[i].clone()).collect())
                .collect(),
        })
    }

    fn write_into(&self, out: &mut String) {
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
    }
}

/// `# `-prefixed header lines, the main table, then each footer table after
/// a blank line.
pub(crate) fn render(header: &[String], main: &CsvTable, footers: &[CsvTable]) -> String {
    let mut out = String::new();
    for h in header {
        out.push_str("# ");
        out.push_str(h);
        out.push('\n');
    }
    main.write_into(&mut out);
    for f in footers {
        out.push('\n');
        f.write_into(&mut out);
    }
    out
}
