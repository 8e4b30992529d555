//! Side-by-side comparison of clamped devices.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::consts::{angular, cyclic};
use crate::dynamics::CavityParams;
use crate::error::{Error, Result};

/// Qubit-compatible mechanical band used to mark the `ω_m` column, Hz.
pub const QUBIT_BAND_HZ: (f64, f64) = (4e9, 8e9);

/// Printed values to compare against, when known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrintedRow {
    pub omega_m_over_kappa: f64,
    pub c0: f64,
}

/// One device. Rates in rad/s; the JSON form uses Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EntryHz", into = "EntryHz")]
pub struct TableEntry {
    pub label: String,
    pub g0: f64,
    pub omega_m: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub printed: Option<PrintedRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EntryHz {
    label: String,
    g0_hz: f64,
    omega_m_hz: f64,
    kappa_hz: f64,
    gamma_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    printed: Option<PrintedRow>,
}

impl TryFrom<EntryHz> for TableEntry {
    type Error = Error;

    fn try_from(e: EntryHz) -> Result<Self> {
        let t = TableEntry {
            label: e.label,
            g0: angular(e.g0_hz),
            omega_m: angular(e.omega_m_hz),
            kappa: angular(e.kappa_hz),
            gamma: angular(e.gamma_hz),
            printed: e.printed,
        };
        t.validate()?;
        Ok(t)
    }
}

impl From<TableEntry> for EntryHz {
    fn from(t: TableEntry) -> Self {
        EntryHz {
            label: t.label,
            g0_hz: cyclic(t.g0),
            omega_m_hz: cyclic(t.omega_m),
            kappa_hz: cyclic(t.kappa),
            gamma_hz: cyclic(t.gamma),
            printed: t.printed,
        }
    }
}

impl TableEntry {
    pub fn from_hz(label: &str, g0: f64, omega_m: f64, kappa: f64, gamma: f64) -> Self {
        Self {
            label: label.into(),
            g0: angular(g0),
            omega_m: angular(omega_m),
            kappa: angular(kappa),
            gamma: angular(gamma),
            printed: None,
        }
    }

    pub fn from_cavity(label: &str, c: &CavityParams) -> Self {
        Self {
            label: label.into(),
            g0: c.g0,
            omega_m: c.omega_m,
            kappa: c.kappa,
            gamma: c.gamma,
            printed: None,
        }
    }

    pub fn with_printed(mut self, omega_m_over_kappa: f64, c0: f64) -> Self {
        self.printed = Some(PrintedRow { omega_m_over_kappa, c0 });
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (n, v) in [("g0", self.g0), ("omega_m", self.omega_m), ("kappa", self.kappa), ("gamma", self.gamma)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{}: {n} must be positive", self.label)));
            }
        }
        Ok(())
    }

    pub fn c0(&self) -> f64 {
        4.0 * self.g0 * self.g0 / (self.kappa * self.gamma)
    }

    pub fn omega_m_over_kappa(&self) -> f64 {
        self.omega_m / self.kappa
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    G0,
    OmegaM,
    Kappa,
    Gamma,
    OmegaMOverKappa,
    C0,
}

impl Column {
    pub const ALL: [Column; 6] = [
        Column::G0,
        Column::OmegaM,
        Column::Kappa,
        Column::Gamma,
        Column::OmegaMOverKappa,
        Column::C0,
    ];

    fn value(self, e: &TableEntry) -> f64 {
        match self {
            Column::G0 => cyclic(e.g0),
            Column::OmegaM => cyclic(e.omega_m),
            Column::Kappa => cyclic(e.kappa),
            Column::Gamma => cyclic(e.gamma),
            Column::OmegaMOverKappa => e.omega_m_over_kappa(),
            Column::C0 => e.c0(),
        }
    }

    fn heading(self) -> &'static str {
        match self {
            Column::G0 => "g0/2pi (kHz)",
            Column::OmegaM => "wm/2pi (GHz)",
            Column::Kappa => "kappa/2pi (GHz)",
            Column::Gamma => "gamma/2pi (MHz)",
            Column::OmegaMOverKappa => "wm/kappa",
            Column::C0 => "C0",
        }
    }

    fn display(self, v: f64) -> String {
        match self {
            Column::G0 => format!("{:.0}", v / 1e3),
            Column::OmegaM => format!("{:.3}", v / 1e9),
            Column::Kappa => format!("{:.2}", v / 1e9),
            Column::Gamma => format!("{:.2}", v / 1e6),
            Column::OmegaMOverKappa => format!("{:.3}", v),
            Column::C0 => format!("{:.2e}", v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub entry: TableEntry,
    pub c0: f64,
    pub omega_m_over_kappa: f64,
    /// Columns in which this row is marked best.
    pub best: Vec<Column>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Report {
    pub rows: Vec<ReportRow>,
    pub notes: Vec<String>,
}

/// Best per column: largest `g0`, `ω_m/κ` and `C0`; smallest `κ` and `γ`;
/// every `ω_m` inside [`QUBIT_BAND_HZ`].
pub fn table1_report(entries: &[TableEntry]) -> Result<Table1Report> {
    if entries.is_empty() {
        return Err(Error::invalid("table needs at least one entry"));
    }
    for e in entries {
        e.validate()?;
    }
    let mut rows: Vec<ReportRow> = entries
        .iter()
        .map(|e| ReportRow {
            entry: e.clone(),
            c0: e.c0(),
            omega_m_over_kappa: e.omega_m_over_kappa(),
            best: Vec::new(),
        })
        .collect();
    for col in Column::ALL {
        let vals: Vec<f64> = entries.iter().map(|e| col.value(e)).collect();
        let winners: Vec<usize> = match col {
            Column::OmegaM => {
                let inside: Vec<usize> = (0..vals.len())
                    .filter(|&i| vals[i] >= QUBIT_BAND_HZ.0 && vals[i] <= QUBIT_BAND_HZ.1)
                    .collect();
                if inside.is_empty() || entries.len() == 1 {
                    (0..vals.len()).filter(|&i| vals[i] == vals.iter().copied().fold(f64::MIN, f64::max)).collect()
                } else {
                    inside
                }
            }
            Column::Kappa | Column::Gamma => {
                let m = vals.iter().copied().fold(f64::INFINITY, f64::min);
                (0..vals.len()).filter(|&i| vals[i] == m).collect()
            }
            _ => {
                let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (0..vals.len()).filter(|&i| vals[i] == m).collect()
            }
        };
        for i in winners {
            rows[i].best.push(col);
        }
    }
    let mut notes = Vec::new();
    for r in &rows {
        if let Some(p) = r.entry.printed {
            let d_ratio = r.omega_m_over_kappa / p.omega_m_over_kappa - 1.0;
            let d_c0 = r.c0 / p.c0 - 1.0;
            notes.push(format!(
                "{}: wm/kappa {:.4} vs printed {} ({:+.1}%), C0 {:.3e} vs printed {:.1e} ({:+.1}%)",
                r.entry.label,
                r.omega_m_over_kappa,
                p.omega_m_over_kappa,
                100.0 * d_ratio,
                r.c0,
                p.c0,
                100.0 * d_c0
            ));
        }
    }
    Ok(Table1Report { rows, notes })
}

impl Table1Report {
    pub fn add_note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn is_best(&self, row: usize, col: Column) -> bool {
        self.rows[row].best.contains(&col)
    }

    /// CSV with one row per device; best cells are flagged in `best`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,g0_hz,omega_m_hz,kappa_hz,gamma_hz,omega_m_over_kappa,c0,best\n");
        for r in &self.rows {
            let best: Vec<String> = r
                .best
                .iter()
                .map(|c| serde_json::to_value(c).unwrap().as_str().unwrap().to_string())
                .collect();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.entry.label,
                cyclic(r.entry.g0),
                cyclic(r.entry.omega_m),
                cyclic(r.entry.kappa),
                cyclic(r.entry.gamma),
                r.omega_m_over_kappa,
                r.c0,
                best.join(";")
            ));
        }
        out
    }
}

impl fmt::Display for Table1Report {
    /// Devices as columns, quantities as rows; best cells starred.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label_w = Column::ALL.iter().map(|c| c.heading().len()).max().unwrap_or(0);
        let cells: Vec<Vec<String>> = Column::ALL
            .iter()
            .map(|&c| {
                self.rows
                    .iter()
                    .map(|r| {
                        let mut s = c.display(c.value(&r.entry));
                        if r.best.contains(&c) {
                            s.push('*');
                        }
                        s
                    })
                    .collect()
            })
            .collect();
        let widths: Vec<usize> = self
            .rows
            .iter()
            .enumerate()
            .map(|(j, r)| cells.iter().map(|row| row[j].len()).max().unwrap_or(0).max(r.entry.label.len()))
            .collect();
        write!(f, "{:label_w$}", "")?;
        for (r, w) in self.rows.iter().zip(&widths) {
            write!(f, "  {:>w$}", r.entry.label)?;
        }
        writeln!(f)?;
        for (c, row) in Column::ALL.iter().zip(&cells) {
            write!(f, "{:label_w$}", c.heading())?;
            for (s, w) in row.iter().zip(&widths) {
                write!(f, "  {s:>w$}")?;
            }
            writeln!(f)?;
        }
        writeln!(f, "* best in column")?;
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn bold_pattern() {
        let r = table1_report(&presets::table1_entries()).unwrap();
        let this = 3;
        for c in [Column::G0, Column::Kappa, Column::OmegaMOverKappa, Column::C0] {
            assert_eq!(r.rows.iter().enumerate().filter(|(_, x)| x.best.contains(&c)).map(|(i, _)| i).collect::<Vec<_>>(), vec![this]);
        }
        assert!(r.is_best(0, Column::OmegaM) && r.is_best(3, Column::OmegaM));
        assert!(!r.is_best(1, Column::OmegaM) && !r.is_best(2, Column::OmegaM));
        assert_eq!(
            r.rows.iter().enumerate().filter(|(_, x)| x.best.contains(&Column::Gamma)).map(|(i, _)| i).collect::<Vec<_>>(),
            vec![1]
        );
    }

    #[test]
    fn single_row_is_best_everywhere() {
        let e = TableEntry::from_hz("only", 1e3, 1e9, 1e9, 1e6);
        let r = table1_report(&[e]).unwrap();
        assert_eq!(r.rows[0].best.len(), Column::ALL.len());
    }

    #[test]
    fn display_and_json() {
        let r = table1_report(&presets::table1_entries()).unwrap();
        let text = r.to_string();
        assert!(text.contains("C0"));
        assert!(text.contains("500*"));
        let e = &presets::table1_entries()[0];
        let json = serde_json::to_string(e).unwrap();
        let back: TableEntry = serde_json::from_str(&json).unwrap();
        assert!((back.g0 / e.g0 - 1.0).abs() < 1e-15);
        assert!(table1_report(&[]).is_err());
    }
}
