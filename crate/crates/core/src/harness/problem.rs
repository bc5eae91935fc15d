use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::care::CareProblem;
use crate::dare::DareProblem;
use crate::error::{Error, Result};
use crate::linalg::{HermitianMatrix, Matrix, C64};
use crate::lyap::{LyapunovProblem, ShiftSequence};
use crate::nme::NmeProblem;
use crate::report::{ReportSummary, SolveReport};
use crate::stein::SteinProblem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Stein,
    Lyapunov,
    Dare,
    Care,
    Nme,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 5] = [Self::Stein, Self::Lyapunov, Self::Dare, Self::Care, Self::Nme];

    pub fn name(self) -> &'static str {
        match self {
            Self::Stein => "stein",
            Self::Lyapunov => "lyapunov",
            Self::Dare => "dare",
            Self::Care => "care",
            Self::Nme => "nme",
        }
    }

    /// Matrices a file of this kind must carry.
    pub fn required(self) -> &'static [&'static str] {
        match self {
            Self::Stein | Self::Nme => &["A", "Q"],
            Self::Lyapunov => &["A"],
            Self::Dare | Self::Care => &["A", "G", "Q"],
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown problem kind \"{s}\"")))
    }
}

/// Rows of `[re, im]` pairs.
pub type RawMatrix = Vec<Vec<[f64; 2]>>;

pub fn to_raw(m: &Matrix) -> RawMatrix {
    m.to_rows()
        .into_iter()
        .map(|row| row.into_iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn from_raw(raw: &RawMatrix, field: &str) -> Result<Matrix> {
    let rows: Vec<Vec<C64>> = raw
        .iter()
        .map(|r| r.iter().map(|&[re, im]| C64::new(re, im)).collect())
        .collect();
    Matrix::from_complex_rows(&rows).map_err(|e| Error::Parse(format!("field \"{field}\": {e}")))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub kind: ProblemKind,
    pub n: usize,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<RawMatrix>,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<RawMatrix>,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q: Option<RawMatrix>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<RawMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shifts: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

impl ProblemFile {
    pub fn new(kind: ProblemKind, n: usize) -> Self {
        Self {
            kind,
            n,
            a: None,
            g: None,
            q: None,
            c: None,
            shifts: None,
            metadata: None,
        }
    }

    fn raw(&self, name: &str) -> Option<&RawMatrix> {
        match name {
            "A" => self.a.as_ref(),
            "G" => self.g.as_ref(),
            "Q" => self.q.as_ref(),
            "C" => self.c.as_ref(),
            _ => None,
        }
    }

    /// Checks presence and shape of the matrices the kind requires.
    pub fn validate(&self) -> Result<()> {
        for &name in self.kind.required() {
            if self.raw(name).is_none() {
                return Err(Error::Parse(format!("kind {} requires matrix \"{name}\"", self.kind)));
            }
        }
        if self.kind == ProblemKind::Lyapunov && self.q.is_none() && self.c.is_none() {
            return Err(Error::Parse("kind lyapunov requires matrix \"Q\" or \"C\"".into()));
        }
        for name in ["A", "G", "Q"] {
            if let Some(m) = self.raw(name) {
                let m = from_raw(m, name)?;
                if m.rows() != self.n || m.cols() != self.n {
                    return Err(Error::Parse(format!(
                        "field \"{name}\" is {}x{}, expected {n}x{n}",
                        m.rows(),
                        m.cols(),
                        n = self.n
                    )));
                }
            }
        }
        if let Some(c) = &self.c {
            let c = from_raw(c, "C")?;
            if c.cols() != self.n {
                return Err(Error::Parse(format!("field \"C\" has {} columns, expected {}", c.cols(), self.n)));
            }
        }
        Ok(())
    }

    pub fn matrix(&self, name: &str) -> Result<Matrix> {
        let raw = self
            .raw(name)
            .ok_or_else(|| Error::Parse(format!("missing matrix \"{name}\"")))?;
        from_raw(raw, name)
    }

    fn hermitian(&self, name: &str) -> Result<HermitianMatrix> {
        HermitianMatrix::new(self.matrix(name)?)
    }

    pub fn set_matrix(&mut self, name: &str, m: &Matrix) {
        let raw = Some(to_raw(m));
        match name {
            "A" => self.a = raw,
            "G" => self.g = raw,
            "Q" => self.q = raw,
            "C" => self.c = raw,
            _ => panic!("unknown matrix field {name}"),
        }
    }

    pub fn shift_sequence(&self) -> Result<Option<ShiftSequence>> {
        match &self.shifts {
            None => Ok(None),
            Some(s) => ShiftSequence::new(s.iter().map(|&[re, im]| C64::new(re, im)).collect()).map(Some),
        }
    }

    pub fn stein(&self) -> Result<SteinProblem> {
        SteinProblem::new(self.matrix("A")?, self.hermitian("Q")?)
    }

    pub fn lyapunov(&self) -> Result<LyapunovProblem> {
        let a = self.matrix("A")?;
        match (&self.q, &self.c) {
            (Some(_), Some(_)) => LyapunovProblem::new(a, self.hermitian("Q")?)?.with_factor(self.matrix("C")?),
            (Some(_), None) => LyapunovProblem::new(a, self.hermitian("Q")?),
            (None, _) => LyapunovProblem::from_factor(a, self.matrix("C")?),
        }
    }

    pub fn dare(&self) -> Result<DareProblem> {
        DareProblem::new(self.matrix("A")?, self.hermitian("G")?, self.hermitian("Q")?)
    }

    pub fn care(&self) -> Result<CareProblem> {
        CareProblem::new(self.matrix("A")?, self.hermitian("G")?, self.hermitian("Q")?)
    }

    pub fn nme(&self) -> Result<NmeProblem> {
        NmeProblem::new(self.matrix("A")?, self.hermitian("Q")?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("problem files always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.validate()?;
        Ok(file)
    }
}

pub fn load_problem(path: &Path) -> Result<ProblemFile> {
    let text = std::fs::read_to_string(path)?;
    ProblemFile::from_json(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn save_problem(path: &Path, file: &ProblemFile) -> Result<()> {
    std::fs::write(path, file.to_json())?;
    Ok(())
}

/// Report file: the summary fields plus the solution matrix.
#[derive(Clone, Debug, Serialize)]
pub struct ReportFile {
    #[serde(flatten)]
    pub summary: ReportSummary,
    #[serde(rename = "X")]
    pub x: RawMatrix,
}

pub fn save_report(path: &Path, report: &SolveReport) -> Result<()> {
    let file = ReportFile {
        summary: report.summary(),
        x: to_raw(report.x.as_matrix()),
    };
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Parses a comma separated list such as `1.5,2+0.5i`.
pub fn parse_shifts(s: &str) -> Result<Vec<C64>> {
    s.split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| C64::from_str(t).map_err(|_| Error::Parse(format!("bad shift \"{t}\""))))
        .collect()
}
