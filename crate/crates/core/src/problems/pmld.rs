//! Binary container for datasets and flat parameter vectors: `PMLD`, a
//! version byte, one `key=value;...` header line, then little-endian
//! row-major train X, train Y, test X, test Y.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::objective::Dataset;
use crate::tensor::{DenseMatrix, Precision};

pub const MAGIC: &[u8; 4] = b"PMLD";
pub const VERSION: u8 = 0x01;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PmldHeader {
    pub problem: String,
    pub n_train: usize,
    pub n_test: usize,
    pub d_in: usize,
    pub d_out: usize,
    pub precision: Precision,
    pub seed: u64,
}

impl PmldHeader {
    pub fn line(&self) -> String {
        format!(
            "problem={};n_train={};n_test={};d_in={};d_out={};precision={};seed={}\n",
            self.problem, self.n_train, self.n_test, self.d_in, self.d_out, self.precision, self.seed
        )
    }

    pub fn payload_len(&self) -> usize {
        (self.n_train + self.n_test) * (self.d_in + self.d_out) * self.precision.bytes()
    }

    fn parse(line: &str) -> Result<Self> {
        let mut fields = std::collections::BTreeMap::new();
        for part in line.split(';') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("header field `{part}` is not key=value")))?;
            fields.insert(k, v);
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| Error::Format(format!("header lacks `{k}`")));
        let num = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| Error::Format(format!("header `{k}` is not an integer")))
        };
        Ok(PmldHeader {
            problem: get("problem")?.to_string(),
            n_train: num("n_train")?,
            n_test: num("n_test")?,
            d_in: num("d_in")?,
            d_out: num("d_out")?,
            precision: get("precision")?.parse().map_err(Error::Format)?,
            seed: get("seed")?
                .parse()
                .map_err(|_| Error::Format("header `seed` is not a u64".into()))?,
        })
    }
}

/// Train and test splits with their header.
#[derive(Debug, Clone, PartialEq)]
pub struct PmldFile {
    pub header: PmldHeader,
    pub train: Dataset,
    pub test: Dataset,
}

fn check_shape(m: &DenseMatrix, rows: usize, cols: usize, what: &str) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::Dimension(format!(
            "{what} is {}x{}, header says {rows}x{cols}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

pub fn encode(header: &PmldHeader, train: &Dataset, test: &Dataset) -> Result<Vec<u8>> {
    check_shape(&train.x, header.n_train, header.d_in, "train X")?;
    check_shape(&train.y, header.n_train, header.d_out, "train Y")?;
    check_shape(&test.x, header.n_test, header.d_in, "test X")?;
    check_shape(&test.y, header.n_test, header.d_out, "test Y")?;
    let line = header.line();
    let mut out = Vec::with_capacity(5 + line.len() + header.payload_len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(line.as_bytes());
    for m in [&train.x, &train.y, &test.x, &test.y] {
        for &v in m.data() {
            match header.precision {
                Precision::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
                Precision::F64 => out.extend_from_slice(&v.to_le_bytes()),
            }
        }
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<PmldFile> {
    if bytes.len() < 5 || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing PMLD magic".into()));
    }
    if bytes[4] != VERSION {
        return Err(Error::Format(format!("unsupported version {}", bytes[4])));
    }
    let rest = &bytes[5..];
    let nl = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("unterminated header".into()))?;
    let line = std::str::from_utf8(&rest[..nl]).map_err(|_| Error::Format("header is not UTF-8".into()))?;
    let header = PmldHeader::parse(line)?;
    let payload = &rest[nl + 1..];
    if payload.len() != header.payload_len() {
        return Err(Error::Format(format!(
            "payload is {} bytes, header implies {}",
            payload.len(),
            header.payload_len()
        )));
    }
    let width = header.precision.bytes();
    let mut values = payload.chunks_exact(width).map(|c| match header.precision {
        Precision::F32 => f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64,
        Precision::F64 => f64::from_le_bytes(c.try_into().expect("8 bytes")),
    });
    let mut take = |rows: usize, cols: usize| DenseMatrix::new(rows, cols, values.by_ref().take(rows * cols).collect());
    let train = Dataset::new(take(header.n_train, header.d_in)?, take(header.n_train, header.d_out)?)?;
    let test = Dataset::new(take(header.n_test, header.d_in)?, take(header.n_test, header.d_out)?)?;
    Ok(PmldFile { header, train, test })
}

pub fn write_pmld(path: &Path, header: &PmldHeader, train: &Dataset, test: &Dataset) -> Result<()> {
    let bytes = encode(header, train, test)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn read_pmld(path: &Path) -> Result<PmldFile> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

/// Stores a flat parameter vector as a single training row with no inputs.
pub fn write_params(path: &Path, theta: &[f64], precision: Precision, seed: u64) -> Result<()> {
    let header = PmldHeader {
        problem: "params".into(),
        n_train: 1,
        n_test: 0,
        d_in: 0,
        d_out: theta.len(),
        precision,
        seed,
    };
    let train = Dataset::new(DenseMatrix::zeros(1, 0), DenseMatrix::new(1, theta.len(), theta.to_vec())?)?;
    let test = Dataset::new(DenseMatrix::zeros(0, 0), DenseMatrix::zeros(0, theta.len()))?;
    write_pmld(path, &header, &train, &test)
}

pub fn read_params(path: &Path) -> Result<Vec<f64>> {
    let file = read_pmld(path)?;
    if file.header.n_train != 1 || file.header.d_in != 0 {
        return Err(Error::Format("not a parameter file".into()));
    }
    Ok(file.train.y.into_data())
}
