//! Check reports shared by the schedule validators and the verify harness.
//!
//! CSV rows are `check,k,index,lhs,rhs,pass` with '.' decimals and LF line
//! endings so goldens are bit-stable.

use serde::Serialize;

#[derive(Clone, Debug)]
pub struct ReportRow {
    pub check: String,
    pub k: u64,
    pub index: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub passes: u64,
    pub failures: u64,
    pub skipped: u64,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub skipped: u64,
}

impl Report {
    pub fn push(&mut self, check: &str, k: u64, index: u64, lhs: f64, rhs: f64, pass: bool) {
        self.rows.push(ReportRow {
            check: check.to_string(),
            k,
            index,
            lhs,
            rhs,
            pass,
        });
    }

    pub fn skip(&mut self) {
        self.skipped += 1;
    }

    pub fn merge(&mut self, other: Report) {
        self.rows.extend(other.rows);
        self.skipped += other.skipped;
    }

    pub fn summary(&self) -> Summary {
        let failures = self.rows.iter().filter(|r| !r.pass).count() as u64;
        Summary {
            passes: self.rows.len() as u64 - failures,
            failures,
            skipped: self.skipped,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,k,index,lhs,rhs,pass\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.17e},{:.17e},{}\n",
                r.check, r.k, r.index, r.lhs, r.rhs, r.pass
            ));
        }
        out
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary()).expect("summary serializes")
    }
}
