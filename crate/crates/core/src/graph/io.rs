use std::path::Path;

use super::SimilarityGraph;
use crate::fsio::{self, Reader};
use crate::{Error, Result};

pub const GRAPH_MAGIC: &[u8; 4] = b"HGG1";
pub const GRAPH_VERSION: u32 = 1;

pub fn encode_graph(g: &SimilarityGraph) -> Vec<u8> {
    let e = g.num_directed_edges();
    let mut out = Vec::with_capacity(24 + (g.num_nodes() + 1) * 8 + e * 8);
    out.extend_from_slice(GRAPH_MAGIC);
    out.extend_from_slice(&GRAPH_VERSION.to_le_bytes());
    out.extend_from_slice(&(g.num_nodes() as u32).to_le_bytes());
    out.extend_from_slice(&(e as u64).to_le_bytes());
    out.extend_from_slice(&g.tau().to_le_bytes());
    for o in g.offsets() {
        out.extend_from_slice(&o.to_le_bytes());
    }
    for t in g.targets() {
        out.extend_from_slice(&t.to_le_bytes());
    }
    fsio::put_f32s(&mut out, g.weights());
    out
}

pub fn write_graph(path: &Path, g: &SimilarityGraph) -> Result<()> {
    fsio::write_atomic(path, &encode_graph(g))
}

pub fn read_graph(path: &Path) -> Result<SimilarityGraph> {
    let bytes = fsio::read(path)?;
    let mut r = Reader::new(&bytes, path);
    r.magic(GRAPH_MAGIC)?;
    let version = r.u32()?;
    if version != GRAPH_VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    let n = r.u32()? as usize;
    let e = r.u64()? as usize;
    let tau = r.f32()?;
    let offsets = r.u64s(n + 1)?;
    let targets = r.u32s(e)?;
    let weights = r.f32s(e)?;
    r.finish()?;
    SimilarityGraph::from_csr(tau, offsets, targets, weights).map_err(|err| Error::format(path, err.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EmbeddingMatrix;
    use crate::graph::{build_graph, GraphConfig};

    #[test]
    fn round_trip_is_bit_exact() {
        let rows: Vec<Vec<f32>> = (0..30)
            .map(|i| (0..6).map(|k| ((i * 7 + k * 3) % 11) as f32 - 4.0 + 0.1).collect())
            .collect();
        let g = build_graph(
            &EmbeddingMatrix::from_rows(&rows).unwrap(),
            &GraphConfig::new(0.3, 4).unwrap(),
        )
        .unwrap();
        assert!(g.num_edges() > 0);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.hgg");
        write_graph(&p, &g).unwrap();
        let back = read_graph(&p).unwrap();
        assert_eq!(back, g);
        assert_eq!(encode_graph(&back), std::fs::read(&p).unwrap());
        assert_eq!(&std::fs::read(&p).unwrap()[..4], b"HGG1");
    }

    #[test]
    fn corrupt_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.hgg");
        let mut bytes = encode_graph(&SimilarityGraph::empty(3, 0.85));
        bytes.push(0);
        std::fs::write(&p, &bytes).unwrap();
        assert!(read_graph(&p).is_err());
        std::fs::write(&p, &bytes[..10]).unwrap();
        assert!(read_graph(&p).is_err());
    }
}
