use serde::{Deserialize, Serialize};

use super::SimilarityGraph;

/// Degree counts in power-of-two buckets: `[0,1)`, `[1,2)`, `[2,4)`, `[4,8)`, ...
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: usize,
    pub hi: usize,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub nodes: usize,
    pub edges: usize,
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    pub median: f64,
    pub isolated_count: usize,
    pub histogram: Vec<HistogramBin>,
}

pub fn degree_stats(graph: &SimilarityGraph) -> DegreeStats {
    let n = graph.num_nodes();
    let mut degrees: Vec<usize> = (0..n).map(|u| graph.degree(u)).collect();
    degrees.sort_unstable();
    let max = degrees.last().copied().unwrap_or(0);
    let median = match n {
        0 => 0.0,
        _ if n % 2 == 1 => degrees[n / 2] as f64,
        _ => (degrees[n / 2 - 1] + degrees[n / 2]) as f64 / 2.0,
    };
    let mut histogram = vec![HistogramBin { lo: 0, hi: 1, count: 0 }];
    let mut lo = 1;
    while lo <= max {
        histogram.push(HistogramBin {
            lo,
            hi: lo * 2,
            count: 0,
        });
        lo *= 2;
    }
    for &d in &degrees {
        let bin = if d == 0 {
            0
        } else {
            (usize::BITS - d.leading_zeros()) as usize
        };
        histogram[bin].count += 1;
    }
    DegreeStats {
        nodes: n,
        edges: graph.num_edges(),
        min: degrees.first().copied().unwrap_or(0),
        max,
        mean: if n == 0 {
            0.0
        } else {
            graph.num_directed_edges() as f64 / n as f64
        },
        median,
        isolated_count: degrees.iter().take_while(|&&d| d == 0).count(),
        histogram,
    }
}

impl std::fmt::Display for DegreeStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "nodes     {:>10}", self.nodes)?;
        writeln!(f, "edges     {:>10}", self.edges)?;
        writeln!(f, "isolated  {:>10}", self.isolated_count)?;
        writeln!(
            f,
            "degree    min {} / median {} / mean {:.3} / max {}",
            self.min, self.median, self.mean, self.max
        )?;
        writeln!(f, "histogram")?;
        for b in &self.histogram {
            writeln!(f, "  [{:>6}, {:>6})  {}", b.lo, b.hi, b.count)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle() {
        let g = SimilarityGraph::from_csr(0.5, vec![0, 2, 4, 6], vec![1, 2, 0, 2, 0, 1], vec![0.9; 6]).unwrap();
        let s = degree_stats(&g);
        assert_eq!((s.min, s.max, s.mean, s.median), (2, 2, 2.0, 2.0));
        assert_eq!(s.isolated_count, 0);
        assert_eq!(s.histogram[2].count, 3);
    }

    #[test]
    fn edgeless() {
        let s = degree_stats(&SimilarityGraph::empty(5, 0.85));
        assert_eq!((s.min, s.max, s.isolated_count), (0, 0, 5));
        assert_eq!(s.histogram, vec![HistogramBin { lo: 0, hi: 1, count: 5 }]);
    }
}
