use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    /// Aligned columns, 4 decimal places.
    #[default]
    Table,
    /// Comma-separated, full precision.
    Csv,
}

/// A rendered cell: text, or a number formatted per output mode.
pub enum Cell {
    Text(String),
    Int(u64),
    Num(f64),
    /// Number printed with an explicit sign in table mode.
    Signed(f64),
    /// Number with a fixed number of decimals in table mode.
    Fixed(f64, usize),
}

impl Cell {
    fn render(&self, format: Format) -> String {
        match (self, format) {
            (Cell::Text(s), _) => s.clone(),
            (Cell::Int(v), _) => v.to_string(),
            (Cell::Num(v) | Cell::Signed(v) | Cell::Fixed(v, _), Format::Csv) => v.to_string(),
            (Cell::Num(v), Format::Table) => format!("{v:.4}"),
            (Cell::Signed(v), Format::Table) => format!("{v:+.4}"),
            (Cell::Fixed(v, d), Format::Table) => format!("{v:.d$}"),
        }
    }

    fn is_text(&self) -> bool {
        matches!(self, Cell::Text(_))
    }
}

pub fn text(s: impl Into<String>) -> Cell {
    Cell::Text(s.into())
}

pub fn render(headers: &[&str], rows: &[Vec<Cell>], format: Format) -> String {
    let cells: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|c| c.render(format)).collect()).collect();
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(headers).expect("in-memory write");
            for r in &cells {
                w.write_record(r).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
        }
        Format::Table => {
            let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
            for r in &cells {
                for (w, c) in widths.iter_mut().zip(r) {
                    *w = (*w).max(c.chars().count());
                }
            }
            let left: Vec<bool> = (0..headers.len()).map(|i| rows.first().is_none_or(|r| r[i].is_text())).collect();
            let line = |fields: &[String]| {
                let parts: Vec<String> = fields
                    .iter()
                    .zip(&widths)
                    .zip(&left)
                    .map(|((f, w), l)| if *l { format!("{f:<w$}") } else { format!("{f:>w$}") })
                    .collect();
                parts.join("  ").trim_end().to_string() + "\n"
            };
            let mut out = line(&headers.iter().map(|h| h.to_string()).collect::<Vec<_>>());
            out += &line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>());
            for r in &cells {
                out += &line(r);
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_and_csv() {
        let rows = vec![vec![text("a,b"), Cell::Num(0.123456), Cell::Int(7)], vec![text("c"), Cell::Signed(0.5), Cell::Int(10)]];
        let t = render(&["name", "x", "n"], &rows, Format::Table);
        assert_eq!(t, "name        x   n\n----  -------  --\na,b    0.1235   7\nc     +0.5000  10\n");
        let c = render(&["name", "x", "n"], &rows, Format::Csv);
        assert_eq!(c, "name,x,n\n\"a,b\",0.123456,7\nc,0.5,10\n");
    }
}
