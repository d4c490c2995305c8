use std::path::Path;

use loewner_core::drivers::{
    write_driver_csv, BuiltinFunctional, DriverKind, DriverSpecFile, KappaStep, SlopeSpec,
};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{io_err, CliResult};

pub const CORPUS_T: f64 = 1.0;
pub const CORPUS_N: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusEntry {
    pub name: String,
    pub spec: DriverSpecFile,
}

fn entry(name: &str, kind: DriverKind, seed: u64) -> CorpusEntry {
    CorpusEntry { name: name.into(), spec: DriverSpecFile { kind, seed, horizon: CORPUS_T, n: CORPUS_N } }
}

fn slopes(v: &[f64]) -> DriverKind {
    DriverKind::FiniteEnergy { slopes: v.to_vec() }
}

/// The standard driver corpus, in a fixed order.
pub fn standard_corpus() -> Vec<CorpusEntry> {
    let f = DriverKind::Functional;
    vec![
        entry("zero", DriverKind::Zero, 0),
        entry("linear_0_5", slopes(&[0.5]), 0),
        entry("linear_1", slopes(&[1.0]), 0),
        entry("linear_2", slopes(&[2.0]), 0),
        entry("piecewise", slopes(&[2.0, -1.0, 0.5, -2.0]), 0),
        entry("brownian_k0_33", DriverKind::Brownian { kappa: 1.0 / 3.0 }, 3),
        entry("brownian_k1", DriverKind::Brownian { kappa: 1.0 }, 7),
        entry("brownian_k1_9", DriverKind::Brownian { kappa: 1.9 }, 19),
        entry(
            "step_kappa",
            DriverKind::VariableKappa {
                kappa_steps: vec![KappaStep { start: 0.0, kappa: 1.0 }, KappaStep { start: 0.5, kappa: 1.9 }],
            },
            11,
        ),
        entry("ou_l1", DriverKind::Ou { lambda: 1.0 }, 13),
        entry(
            "h_perturbed",
            DriverKind::HPerturbed { inner: Box::new(DriverKind::Brownian { kappa: 1.0 }), h: SlopeSpec { slopes: vec![1.0] } },
            17,
        ),
        entry("t_half_b", f(BuiltinFunctional::TPowP { p: 0.5 }), 23),
        entry("t_b", f(BuiltinFunctional::TPowP { p: 1.0 }), 29),
        entry("t_log1p_b2", f(BuiltinFunctional::TLog1pX2), 31),
    ]
}

pub fn lookup(name: &str) -> Option<CorpusEntry> {
    standard_corpus().into_iter().find(|e| e.name == name)
}

/// Names of the deterministic (finite-energy) corpus drivers.
pub fn finite_energy_names() -> Vec<String> {
    standard_corpus().into_iter().filter(|e| e.spec.kind.is_deterministic()).map(|e| e.name).collect()
}

pub fn render_csv(e: &CorpusEntry) -> CliResult<Vec<u8>> {
    let sample = e.spec.sample()?;
    let mut buf = Vec::new();
    write_driver_csv(&sample.path, &mut buf).expect("writing to memory");
    Ok(buf)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Content hash of a blob, framed like a git object id but with SHA-256.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut framed = format!("blob {}\0", bytes.len()).into_bytes();
    framed.extend_from_slice(bytes);
    sha256_hex(&framed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub name: String,
    pub file: String,
    pub blob_sha256: String,
    pub spec: DriverSpecFile,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub corpus_sha256: String,
    pub entries: Vec<ManifestEntry>,
}

pub fn manifest() -> CliResult<Manifest> {
    let mut entries = Vec::new();
    for e in standard_corpus() {
        let bytes = render_csv(&e)?;
        entries.push(ManifestEntry { file: format!("{}.csv", e.name), name: e.name, blob_sha256: blob_hash(&bytes), spec: e.spec });
    }
    // tree hash: one "<hash> <file>\n" line per entry
    let tree: String = entries.iter().map(|e| format!("{} {}\n", e.blob_sha256, e.file)).collect();
    Ok(Manifest { corpus_sha256: blob_hash(tree.as_bytes()), entries })
}

/// Writes `<name>.csv` for every corpus driver plus `manifest.json`.
pub fn write_corpus(dir: &Path) -> CliResult<Manifest> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    for e in standard_corpus() {
        let p = dir.join(format!("{}.csv", e.name));
        std::fs::write(&p, render_csv(&e)?).map_err(io_err(&p))?;
    }
    let m = manifest()?;
    let p = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&m).expect("serializable");
    text.push('\n');
    std::fs::write(&p, text).map_err(io_err(&p))?;
    Ok(m)
}
