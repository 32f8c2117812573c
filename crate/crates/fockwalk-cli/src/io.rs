//! Tensor dump formats.
//!
//! Every tensor goes out as `<name>.bin`: a single JSON header line (shape,
//! index convention, dtype, element count), a newline, then the payload as
//! little-endian f64 — `re, im` interleaved for complex data. Tensors small
//! enough to eyeball (≤ 4096 elements) additionally get a `<name>.json` twin
//! with the values spelled out.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use anyhow::Context;
use fockwalk::C64;
use serde::Serialize;

/// Twin-file threshold: above this element count only the binary is written.
pub const JSON_TWIN_LIMIT: usize = 4096;

#[derive(Debug, Clone, Serialize)]
struct TensorHeader<'a> {
    shape: &'a [usize],
    index_convention: &'a str,
    dtype: &'a str,
    count: usize,
}

fn write_bin(path: &Path, header: &TensorHeader<'_>, payload: &[f64]) -> anyhow::Result<()> {
    let mut bytes = serde_json::to_vec(header)?;
    bytes.push(b'\n');
    bytes.reserve(payload.len() * 8);
    for x in payload {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    let mut file = fs::File::create(path).with_context(|| format!("create {}", path.display()))?;
    file.write_all(&bytes)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct ComplexTwin<'a> {
    shape: &'a [usize],
    index_convention: &'a str,
    values: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize)]
struct RealTwin<'a> {
    shape: &'a [usize],
    index_convention: &'a str,
    values: &'a [f64],
}

fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("create {}", path.display()))?;
    Ok(())
}

/// Write a complex tensor; returns the file names written.
pub fn write_complex_tensor(
    dir: &Path,
    name: &str,
    shape: &[usize],
    data: &[C64],
    index_convention: &str,
) -> anyhow::Result<Vec<String>> {
    let mut payload = Vec::with_capacity(data.len() * 2);
    for z in data {
        payload.push(z.re);
        payload.push(z.im);
    }
    let header =
        TensorHeader { shape, index_convention, dtype: "complex128", count: data.len() };
    let bin_name = format!("{name}.bin");
    write_bin(&dir.join(&bin_name), &header, &payload)?;
    let mut written = vec![bin_name];
    if data.len() <= JSON_TWIN_LIMIT {
        let twin = ComplexTwin {
            shape,
            index_convention,
            values: data.iter().map(|z| [z.re, z.im]).collect(),
        };
        let json_name = format!("{name}.json");
        write_json_pretty(&dir.join(&json_name), &twin)?;
        written.push(json_name);
    }
    Ok(written)
}

/// Write a real tensor; returns the file names written.
pub fn write_real_tensor(
    dir: &Path,
    name: &str,
    shape: &[usize],
    data: &[f64],
    index_convention: &str,
) -> anyhow::Result<Vec<String>> {
    let header = TensorHeader { shape, index_convention, dtype: "float64", count: data.len() };
    let bin_name = format!("{name}.bin");
    write_bin(&dir.join(&bin_name), &header, data)?;
    let mut written = vec![bin_name];
    if data.len() <= JSON_TWIN_LIMIT {
        let twin = RealTwin { shape, index_convention, values: data };
        let json_name = format!("{name}.json");
        write_json_pretty(&dir.join(&json_name), &twin)?;
        written.push(json_name);
    }
    Ok(written)
}

/// Read back a `.bin` tensor (header line + LE f64 payload) as raw f64s.
pub fn read_bin(path: &Path) -> anyhow::Result<(serde_json::Value, Vec<f64>)> {
    let bytes = fs::read(path).with_context(|| format!("read {}", path.display()))?;
    let split = bytes
        .iter()
        .position(|&b| b == b'\n')
        .context("missing header line")?;
    let header: serde_json::Value = serde_json::from_slice(&bytes[..split])?;
    let payload = &bytes[split + 1..];
    anyhow::ensure!(payload.len() % 8 == 0, "payload is not whole f64 words");
    let values = payload
        .chunks_exact(8)
        .map(|w| f64::from_le_bytes(w.try_into().unwrap()))
        .collect();
    Ok((header, values))
}
