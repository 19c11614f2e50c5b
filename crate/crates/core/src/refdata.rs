//! Published reference values (solution tables, residual maxima, and the
//! E-algorithm comparison columns).
//!
//! The data ships as a CSV file, `data/reference.csv`, with columns
//! `example,method,J,r,t,value`. `method` is `QLM`, `NEWTON` or `EALGO`
//! (the latter with empty `J` and `r`), and `t = inf` marks a residual
//! maximum row. Values keep their printed decimal text so that the file
//! round-trips byte for byte.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::problem::{Example, Method, SolutionGrid};

/// Environment variable that overrides the embedded reference file.
pub const REFDATA_ENV: &str = "HAAR_BVP_REFDATA";

const EMBEDDED: &str = include_str!("../data/reference.csv");
const HEADER: &str = "example,method,J,r,t,value";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RefMethod {
    Solver(Method),
    EAlgorithm,
}

impl fmt::Display for RefMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RefMethod::Solver(m) => m.fmt(f),
            RefMethod::EAlgorithm => f.write_str("EALGO"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefPoint {
    At(f64),
    /// Residual maximum row (`t = inf`).
    ResidualSup,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefEntry {
    pub example: u8,
    pub method: RefMethod,
    pub level: Option<u32>,
    pub r: Option<u32>,
    pub point: RefPoint,
    pub value: f64,
    /// The value exactly as printed.
    pub text: String,
    raw_t: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceData {
    entries: Vec<RefEntry>,
}

/// One published table: rows are `t` values, columns are `(J, r)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTable {
    pub example_id: u8,
    pub method: Method,
    pub columns: Vec<(u32, u32)>,
    pub rows: Vec<f64>,
    /// `values[column][row]`.
    pub values: Vec<Vec<f64>>,
    pub ealgo: Option<Vec<f64>>,
    /// One residual maximum per column, when published.
    pub r_inf: Option<Vec<f64>>,
}

impl ReferenceTable {
    pub fn column(&self, level: u32) -> Result<&[f64]> {
        self.columns
            .iter()
            .position(|&(j, _)| j == level)
            .map(|k| self.values[k].as_slice())
            .ok_or_else(|| {
                Error::MissingCell(format!(
                    "example {} {} J={level}",
                    self.example_id, self.method
                ))
            })
    }

    pub fn r_inf_at(&self, level: u32) -> Option<f64> {
        let k = self.columns.iter().position(|&(j, _)| j == level)?;
        self.r_inf.as_ref().map(|r| r[k])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub t: f64,
    pub computed: f64,
    pub reference: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub max_diff: f64,
    pub atol: f64,
    pub pass: bool,
}

fn parse_opt_u32(field: &str, line: usize) -> Result<Option<u32>> {
    if field.is_empty() {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| Error::RefData {
        line,
        message: format!("bad integer `{field}`"),
    })
}

impl ReferenceData {
    pub fn embedded() -> Self {
        Self::from_csv_str(EMBEDDED).expect("embedded reference data is well formed")
    }

    /// The file named by `HAAR_BVP_REFDATA`, or the embedded copy.
    pub fn load() -> Result<Self> {
        match std::env::var_os(REFDATA_ENV) {
            Some(path) => Self::from_path(Path::new(&path)),
            None => Ok(Self::embedded()),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_csv_str(&text)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == HEADER => {}
            _ => {
                return Err(Error::RefData {
                    line: 1,
                    message: format!("expected header `{HEADER}`"),
                })
            }
        }
        let mut entries = Vec::new();
        for (k, line) in lines {
            let lineno = k + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 6 {
                return Err(Error::RefData {
                    line: lineno,
                    message: format!("expected 6 fields, found {}", fields.len()),
                });
            }
            let bad = |message: String| Error::RefData {
                line: lineno,
                message,
            };
            let example: u8 = fields[0]
                .parse()
                .map_err(|_| bad(format!("bad example `{}`", fields[0])))?;
            let method = match fields[1] {
                "QLM" => RefMethod::Solver(Method::Qlm),
                "NEWTON" => RefMethod::Solver(Method::Newton),
                "EALGO" => RefMethod::EAlgorithm,
                other => return Err(bad(format!("unknown method `{other}`"))),
            };
            let level = parse_opt_u32(fields[2], lineno)?;
            let r = parse_opt_u32(fields[3], lineno)?;
            let point = if fields[4] == "inf" {
                RefPoint::ResidualSup
            } else {
                RefPoint::At(
                    fields[4]
                        .parse()
                        .map_err(|_| bad(format!("bad t `{}`", fields[4])))?,
                )
            };
            let value: f64 = fields[5]
                .parse()
                .map_err(|_| bad(format!("bad value `{}`", fields[5])))?;
            entries.push(RefEntry {
                example,
                method,
                level,
                r,
                point,
                value,
                text: fields[5].to_string(),
                raw_t: fields[4].to_string(),
            });
        }
        Ok(ReferenceData { entries })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        for e in &self.entries {
            let opt = |v: Option<u32>| v.map(|x| x.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.example,
                e.method,
                opt(e.level),
                opt(e.r),
                e.raw_t,
                e.text
            ));
        }
        out
    }

    pub fn entries(&self) -> &[RefEntry] {
        &self.entries
    }

    /// The printed value at `(example, method, J, t)`.
    pub fn lookup(&self, example: Example, method: Method, level: u32, t: f64) -> Result<f64> {
        self.entries
            .iter()
            .find(|e| {
                e.example == example.id()
                    && e.method == RefMethod::Solver(method)
                    && e.level == Some(level)
                    && matches!(e.point, RefPoint::At(x) if (x - t).abs() < 1e-12)
            })
            .map(|e| e.value)
            .ok_or_else(|| {
                Error::MissingCell(format!("example {} {method} J={level} t={t}", example.id()))
            })
    }

    pub fn table(&self, example: Example, method: Method) -> Result<ReferenceTable> {
        let id = example.id();
        let mine: Vec<&RefEntry> = self
            .entries
            .iter()
            .filter(|e| e.example == id && e.method == RefMethod::Solver(method))
            .collect();
        if mine.is_empty() {
            return Err(Error::MissingCell(format!("example {id} {method}")));
        }
        let mut columns: Vec<(u32, u32)> = Vec::new();
        let mut rows: Vec<f64> = Vec::new();
        for e in &mine {
            let col = (e.level.unwrap_or(0), e.r.unwrap_or(0));
            if !columns.contains(&col) {
                columns.push(col);
            }
            if let RefPoint::At(t) = e.point {
                if !rows.contains(&t) {
                    rows.push(t);
                }
            }
        }
        rows.sort_by(|a, b| a.total_cmp(b));
        columns.sort();

        let find = |col: (u32, u32), point: RefPoint| {
            mine.iter()
                .find(|e| (e.level.unwrap_or(0), e.r.unwrap_or(0)) == col && e.point == point)
                .map(|e| e.value)
        };
        let mut values = Vec::with_capacity(columns.len());
        for &col in &columns {
            let column: Option<Vec<f64>> =
                rows.iter().map(|&t| find(col, RefPoint::At(t))).collect();
            values.push(column.ok_or_else(|| {
                Error::MissingCell(format!("example {id} {method} J={} is incomplete", col.0))
            })?);
        }
        let r_inf: Option<Vec<f64>> = columns
            .iter()
            .map(|&col| find(col, RefPoint::ResidualSup))
            .collect();
        let ealgo: Option<Vec<f64>> = rows
            .iter()
            .map(|&t| {
                self.entries
                    .iter()
                    .find(|e| {
                        e.example == id
                            && e.method == RefMethod::EAlgorithm
                            && e.point == RefPoint::At(t)
                    })
                    .map(|e| e.value)
            })
            .collect();
        Ok(ReferenceTable {
            example_id: id,
            method,
            columns,
            rows,
            values,
            ealgo,
            r_inf,
        })
    }
}

/// Compare a solution against `reference` values on `ts`.
pub fn compare_values(
    sol: &SolutionGrid,
    ts: &[f64],
    reference: &[f64],
    atol: f64,
) -> Result<ComparisonReport> {
    if ts.len() != reference.len() || sol.eval_points.len() != ts.len() {
        return Err(Error::GridMismatch);
    }
    let mut rows = Vec::with_capacity(ts.len());
    for ((&t, &r), (&st, &y)) in ts
        .iter()
        .zip(reference)
        .zip(sol.eval_points.iter().zip(&sol.y))
    {
        if (t - st).abs() > 1e-12 {
            return Err(Error::GridMismatch);
        }
        rows.push(ComparisonRow {
            t,
            computed: y,
            reference: r,
            abs_diff: (y - r).abs(),
        });
    }
    let max_diff = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    Ok(ComparisonReport {
        rows,
        max_diff,
        atol,
        pass: max_diff <= atol,
    })
}

/// Compare against the table column at the solution's own level.
pub fn compare(sol: &SolutionGrid, table: &ReferenceTable, atol: f64) -> Result<ComparisonReport> {
    let column = table.column(sol.config.level())?;
    compare_values(sol, &table.rows, column, atol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::{CoefficientVector, ResolutionConfig};

    fn fake_solution(level: u32, ts: &[f64], ys: &[f64]) -> SolutionGrid {
        let config = ResolutionConfig::new(level).unwrap();
        let mut sol = SolutionGrid::new(
            config,
            CoefficientVector::zeros(config.n()),
            -1.0,
            0,
            Method::Qlm,
            ts.to_vec(),
        );
        sol.y = ys.to_vec();
        sol
    }

    #[test]
    fn lookups() {
        let data = ReferenceData::embedded();
        assert_eq!(
            data.lookup(Example::One, Method::Qlm, 8, 0.1).unwrap(),
            0.84947
        );
        assert_eq!(
            data.lookup(Example::Two, Method::Newton, 3, 0.8).unwrap(),
            0.153353
        );
        assert_eq!(
            data.lookup(Example::Four, Method::Newton, 7, 0.9).unwrap(),
            1.61829
        );
        assert!(matches!(
            data.lookup(Example::Four, Method::Qlm, 7, 0.9),
            Err(Error::MissingCell(_))
        ));
        assert!(data.lookup(Example::One, Method::Qlm, 4, 0.1).is_err());
    }

    #[test]
    fn embedded_round_trips_bytes() {
        let data = ReferenceData::embedded();
        assert_eq!(data.to_csv(), EMBEDDED);
        assert_eq!(ReferenceData::from_csv_str(&data.to_csv()).unwrap(), data);
    }

    #[test]
    fn tables_are_complete() {
        let data = ReferenceData::embedded();
        for ex in [Example::One, Example::Two, Example::Three] {
            for m in [Method::Qlm, Method::Newton] {
                let t = data.table(ex, m).unwrap();
                assert_eq!(t.columns, vec![(3, 3), (5, 3), (7, 3), (8, 3)]);
                assert_eq!(t.rows, crate::report_points());
                assert_eq!(t.ealgo.as_ref().unwrap().len(), 9);
                assert!(t.r_inf.is_none());
                assert!(t.values.iter().flatten().all(|&v| v > 0.0 && v <= 1.0));
            }
        }
        let t7 = data.table(Example::Four, Method::Newton).unwrap();
        assert_eq!(t7.columns, vec![(3, 3), (5, 3), (7, 3)]);
        assert_eq!(t7.r_inf, Some(vec![0.102233, 0.0237877, 0.00601627]));
        assert!(t7.ealgo.is_none());
        assert!(t7.values.iter().flatten().all(|&v| v > 0.9 && v < 1.7));
        assert!(data.table(Example::Four, Method::Qlm).is_err());
    }

    #[test]
    fn qlm_and_newton_tables_are_identical() {
        let data = ReferenceData::embedded();
        for ex in [Example::One, Example::Two, Example::Three] {
            let q = data.table(ex, Method::Qlm).unwrap();
            let n = data.table(ex, Method::Newton).unwrap();
            assert_eq!(q.values, n.values);
        }
    }

    #[test]
    fn example_one_refines_toward_ealgo() {
        let t = ReferenceData::embedded()
            .table(Example::One, Method::Qlm)
            .unwrap();
        let ealgo = t.ealgo.as_ref().unwrap();
        for (row, e) in ealgo.iter().enumerate() {
            let gaps: Vec<f64> = t.values.iter().map(|col| (col[row] - e).abs()).collect();
            assert!(
                gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12),
                "row {row}: {gaps:?}"
            );
        }
    }

    #[test]
    fn comparison_reports() {
        let ts = crate::report_points();
        let refs: Vec<f64> = ts.iter().map(|t| 1.0 - t).collect();
        let same = fake_solution(3, &ts, &refs);
        let r = compare_values(&same, &ts, &refs, 0.0).unwrap();
        assert_eq!(r.max_diff, 0.0);
        assert!(r.pass);

        let shifted: Vec<f64> = refs.iter().map(|v| v + 1e-3).collect();
        let off = fake_solution(3, &ts, &shifted);
        let r = compare_values(&off, &ts, &refs, 1e-4).unwrap();
        assert!(!r.pass);
        assert!((r.max_diff - 1e-3).abs() < 1e-12);

        let other_grid = fake_solution(3, &[0.5], &[0.5]);
        assert_eq!(
            compare_values(&other_grid, &ts, &refs, 1.0),
            Err(Error::GridMismatch)
        );
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(ReferenceData::from_csv_str("a,b\n").is_err());
        let bad = format!("{HEADER}\n1,QLM,3,3,0.1\n");
        assert!(matches!(
            ReferenceData::from_csv_str(&bad),
            Err(Error::RefData { line: 2, .. })
        ));
        let bad = format!("{HEADER}\n1,SHOOT,3,3,0.1,0.5\n");
        assert!(ReferenceData::from_csv_str(&bad).is_err());
    }
}
