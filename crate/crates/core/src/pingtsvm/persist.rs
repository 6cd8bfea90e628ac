//! Versioned text model files with a trailing SHA-256 of everything above it.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{PinGtsvmError, PinGtsvmModel, PinGtsvmParams};
use crate::dataset::{LabelMap, Standardizer};
use crate::kernel::{KernelKind, KernelSpec};
use crate::linalg::Matrix;
use crate::Scalar;

pub const FORMAT_VERSION: &str = "pingtsvm/1";

fn join<T: Scalar>(v: &[T]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

fn digest(payload: &str) -> String {
    hex::encode(Sha256::digest(payload.as_bytes()))
}

/// Renders the model file, checksum line included.
pub fn write_model<T: Scalar>(model: &PinGtsvmModel<T>) -> String {
    let p = &model.params;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k}: {v}");
    };
    kv("scalar", T::NAME.to_string());
    kv("kernel", p.kernel.kind.to_string());
    kv("sigma", format!("{:?}", p.kernel.sigma));
    kv("c1", format!("{:?}", p.c1));
    kv("c2", format!("{:?}", p.c2));
    kv("tau1", format!("{:?}", p.tau1));
    kv("tau2", format!("{:?}", p.tau2));
    kv("ridge", format!("{:?}", p.ridge));
    kv("d", model.d().to_string());
    kv("m", model.m().to_string());
    kv("label_map", format!("+1={},-1={}", model.label_map.token(1), model.label_map.token(-1)));
    kv("standardize", if model.standardizer.is_some() { "yes" } else { "no" }.to_string());
    kv("created_by", format!("pingtsvm {}", env!("CARGO_PKG_VERSION")));

    let mut body = format!("{FORMAT_VERSION}\n{out}");
    let mut block = |name: &str, lines: Vec<String>| {
        body.push_str(&format!("[{name}]\n"));
        for l in lines {
            body.push_str(&l);
            body.push('\n');
        }
    };
    if let Some(s) = &model.standardizer {
        block("mean", vec![join(&s.mean)]);
        block("scale", vec![join(&s.scale)]);
    }
    block("D", model.support.row_iter().map(join).collect());
    block("u1", vec![join(&model.u1)]);
    block("b1", vec![format!("{:?}", model.b1)]);
    block("u2", vec![join(&model.u2)]);
    block("b2", vec![format!("{:?}", model.b2)]);
    block("norm1", vec![format!("{:?}", model.norm1)]);
    block("norm2", vec![format!("{:?}", model.norm2)]);
    let sum = digest(&body);
    body.push_str(&sum);
    body.push('\n');
    body
}

pub fn save_model<T: Scalar>(model: &PinGtsvmModel<T>, path: impl AsRef<Path>) -> Result<(), PinGtsvmError> {
    let path = path.as_ref();
    fs::write(path, write_model(model)).map_err(|source| PinGtsvmError::Io { path: path.display().to_string(), source })
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<PinGtsvmModel<T>, PinGtsvmError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| PinGtsvmError::Io { path: path.display().to_string(), source })?;
    parse_model(&text)
}

struct Lines<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn corrupt(&self, msg: impl Into<String>) -> PinGtsvmError {
        PinGtsvmError::Corrupt { line: self.pos + 1, msg: msg.into() }
    }

    fn next(&mut self) -> Result<&'a str, PinGtsvmError> {
        let l = *self.lines.get(self.pos).ok_or_else(|| self.corrupt("unexpected end of file"))?;
        self.pos += 1;
        Ok(l)
    }

    fn peek(&self) -> Option<&'a str> {
        self.lines.get(self.pos).copied()
    }

    fn header(&mut self, key: &str) -> Result<&'a str, PinGtsvmError> {
        let l = self.next()?;
        match l.split_once(": ") {
            Some((k, v)) if k == key => Ok(v),
            _ => {
                self.pos -= 1;
                Err(self.corrupt(format!("expected header `{key}`")))
            }
        }
    }

    fn number<T: Scalar>(&mut self, key: &str) -> Result<T, PinGtsvmError> {
        let v = self.header(key)?;
        v.parse::<T>().map_err(|_| PinGtsvmError::Corrupt { line: self.pos, msg: format!("bad number `{v}` for {key}") })
    }

    fn count(&mut self, key: &str) -> Result<usize, PinGtsvmError> {
        let v = self.header(key)?;
        v.parse().map_err(|_| PinGtsvmError::Corrupt { line: self.pos, msg: format!("bad count `{v}` for {key}") })
    }

    fn block_start(&mut self, name: &str) -> Result<(), PinGtsvmError> {
        if self.next()? != format!("[{name}]") {
            self.pos -= 1;
            return Err(self.corrupt(format!("expected block [{name}]")));
        }
        Ok(())
    }

    fn row<T: Scalar>(&mut self, len: usize) -> Result<Vec<T>, PinGtsvmError> {
        let l = self.next()?;
        let line = self.pos;
        let vals: Vec<T> = l
            .split(',')
            .map(|f| f.parse::<T>().map_err(|_| PinGtsvmError::Corrupt { line, msg: format!("bad number `{f}`") }))
            .collect::<Result<_, _>>()?;
        if vals.len() != len {
            return Err(PinGtsvmError::Corrupt { line, msg: format!("expected {len} values, found {}", vals.len()) });
        }
        Ok(vals)
    }

    fn vector<T: Scalar>(&mut self, name: &str, len: usize) -> Result<Vec<T>, PinGtsvmError> {
        self.block_start(name)?;
        self.row(len)
    }

    fn scalar<T: Scalar>(&mut self, name: &str) -> Result<T, PinGtsvmError> {
        Ok(self.vector(name, 1)?[0])
    }
}

/// Parses model text: version, then checksum, then contents.
pub fn parse_model<T: Scalar>(text: &str) -> Result<PinGtsvmModel<T>, PinGtsvmError> {
    let first = text.lines().next().unwrap_or("");
    if first != FORMAT_VERSION {
        return Err(PinGtsvmError::Version { found: first.to_string(), expected: FORMAT_VERSION.to_string() });
    }
    let trimmed = text.strip_suffix('\n').ok_or(PinGtsvmError::Corrupt { line: 0, msg: "missing final newline".into() })?;
    let (payload, sum) = match trimmed.rfind('\n') {
        Some(i) => (&text[..=i], &trimmed[i + 1..]),
        None => return Err(PinGtsvmError::Corrupt { line: 1, msg: "missing checksum".into() }),
    };
    if digest(payload) != sum {
        return Err(PinGtsvmError::Checksum);
    }

    let mut r = Lines { lines: payload.lines().collect(), pos: 1 };
    let scalar = r.header("scalar")?;
    if scalar != T::NAME {
        return Err(r.corrupt(format!("model stores {scalar} values, reader expects {}", T::NAME)));
    }
    let kind: KernelKind = r.header("kernel")?.parse().map_err(|e: crate::kernel::KernelError| r.corrupt(e.to_string()))?;
    let sigma: T = r.number("sigma")?;
    let c1 = r.number("c1")?;
    let c2 = r.number("c2")?;
    let tau1 = r.number("tau1")?;
    let tau2 = r.number("tau2")?;
    let ridge = r.number("ridge")?;
    let d = r.count("d")?;
    let m = r.count("m")?;
    let labels = r.header("label_map")?;
    let label_map = labels
        .strip_prefix("+1=")
        .and_then(|rest| rest.split_once(",-1="))
        .and_then(|(pos, neg)| LabelMap::pair(pos, neg).ok())
        .ok_or_else(|| r.corrupt(format!("bad label map `{labels}`")))?;
    let standardize = match r.header("standardize")? {
        "yes" => true,
        "no" => false,
        other => return Err(r.corrupt(format!("bad standardize flag `{other}`"))),
    };
    r.header("created_by")?;

    let standardizer = if standardize {
        let mean = r.vector("mean", d)?;
        let scale = r.vector("scale", d)?;
        Some(Standardizer { mean, scale })
    } else {
        None
    };
    r.block_start("D")?;
    let mut data = Vec::with_capacity(m * d);
    for _ in 0..m {
        data.extend(r.row::<T>(d)?);
    }
    let support = Matrix::from_vec(m, d, data).map_err(|e| r.corrupt(e.to_string()))?;
    let u1 = r.vector("u1", m)?;
    let b1 = r.scalar("b1")?;
    let u2 = r.vector("u2", m)?;
    let b2 = r.scalar("b2")?;
    let norm1 = r.scalar("norm1")?;
    let norm2 = r.scalar("norm2")?;
    if r.peek().is_some() {
        return Err(r.corrupt("trailing content"));
    }

    let params = PinGtsvmParams { c1, c2, tau1, tau2, kernel: KernelSpec { kind, sigma }, ridge };
    let model = PinGtsvmModel { support, u1, b1, u2, b2, norm1, norm2, params, label_map, standardizer };
    model.validate()?;
    Ok(model)
}
