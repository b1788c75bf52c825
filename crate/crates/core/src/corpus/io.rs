use std::path::Path;

use super::{Corpus, CorpusManifest, EmbeddingMatrix, Record};
use crate::fsio::{self, Reader};
use crate::{Error, Result};

pub const EMBEDDING_MAGIC: &[u8; 4] = b"HGE1";
pub const EMBEDDING_VERSION: u32 = 1;

/// Reads an `HGE1` embedding file.
pub fn read_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    let bytes = fsio::read(path)?;
    let mut r = Reader::new(&bytes, path);
    r.magic(EMBEDDING_MAGIC)?;
    let version = r.u32()?;
    if version != EMBEDDING_VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    let n = r.u32()? as usize;
    let d = r.u32()? as usize;
    let values = r.f32s(n * d)?;
    r.finish()?;
    EmbeddingMatrix::new(n, d, values).map_err(|e| match e {
        Error::ZeroNorm { row } => Error::format(path, format!("zero-norm embedding at row {row}")),
        Error::Data(msg) => Error::format(path, msg),
        other => other,
    })
}

pub fn encode_embeddings(m: &EmbeddingMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + m.values().len() * 4);
    out.extend_from_slice(EMBEDDING_MAGIC);
    out.extend_from_slice(&EMBEDDING_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.dim() as u32).to_le_bytes());
    fsio::put_f32s(&mut out, m.values());
    out
}

pub fn write_embeddings(path: &Path, m: &EmbeddingMatrix) -> Result<()> {
    fsio::write_atomic(path, &encode_embeddings(m))
}

/// Reads a JSON-lines labels file. Blank lines are ignored.
pub fn read_labels(path: &Path) -> Result<Vec<Record>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str::<Record>(line).map_err(|e| Error::format(path, format!("line {}: {e}", i + 1)))
        })
        .collect()
}

pub fn write_labels(path: &Path, records: &[Record]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    fsio::write_atomic(path, out.as_bytes())
}

/// Loads an embedding file and its labels file; row `i` pairs with line `i`.
pub fn load_corpus(embedding_file: &Path, labels_file: &Path, num_classes: usize) -> Result<Corpus> {
    let embeddings = read_embeddings(embedding_file)?;
    let records = read_labels(labels_file)?;
    let mut manifest = CorpusManifest::new(num_classes, embeddings.dim());
    manifest.embeddings = Some(embedding_file.display().to_string());
    manifest.labels = Some(labels_file.display().to_string());
    Corpus::new(records, embeddings, manifest).map_err(|e| match e {
        Error::Data(msg) => Error::format(labels_file, msg),
        other => other,
    })
}

/// Loads a corpus through its manifest; data file paths resolve against
/// the manifest's directory.
pub fn load_corpus_manifest(manifest_file: &Path) -> Result<Corpus> {
    let text = std::fs::read_to_string(manifest_file).map_err(|e| Error::io(manifest_file, e))?;
    let manifest: CorpusManifest =
        serde_json::from_str(&text).map_err(|e| Error::format(manifest_file, e.to_string()))?;
    let base = manifest_file.parent().unwrap_or_else(|| Path::new("."));
    let (Some(emb), Some(labels)) = (&manifest.embeddings, &manifest.labels) else {
        return Err(Error::format(
            manifest_file,
            "manifest must name `embeddings` and `labels` files",
        ));
    };
    let mut corpus = load_corpus(&base.join(emb), &base.join(labels), manifest.num_classes)?;
    if corpus.embeddings().dim() != manifest.dim {
        return Err(Error::format(
            manifest_file,
            format!(
                "manifest dim {} but embeddings have {}",
                manifest.dim,
                corpus.embeddings().dim()
            ),
        ));
    }
    *corpus.manifest_mut() = manifest;
    Ok(corpus)
}

/// Writes `<prefix>.emb`, `<prefix>.labels.jsonl` and `<prefix>.manifest.json`.
/// Returns the manifest path.
pub fn save_corpus(corpus: &Corpus, prefix: &Path) -> Result<std::path::PathBuf> {
    let with_ext = |ext: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(ext);
        std::path::PathBuf::from(s)
    };
    let emb_path = with_ext(".emb");
    let labels_path = with_ext(".labels.jsonl");
    let manifest_path = with_ext(".manifest.json");
    write_embeddings(&emb_path, corpus.embeddings())?;
    write_labels(&labels_path, corpus.records())?;
    let file_name = |p: &Path| p.file_name().unwrap().to_string_lossy().into_owned();
    let mut manifest = corpus.manifest().clone();
    manifest.embeddings = Some(file_name(&emb_path));
    manifest.labels = Some(file_name(&labels_path));
    let json = serde_json::to_string_pretty(&manifest)?;
    fsio::write_atomic(&manifest_path, json.as_bytes())?;
    Ok(manifest_path)
}
