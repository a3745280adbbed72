//! Growth statistics for history graphs.

use std::collections::BTreeMap;
use std::fmt;

use crate::history::HistoryGraph;

/// An exact non-negative rational, kept reduced.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        if den == 0 {
            return Ratio { num, den };
        }
        let g = gcd(num.max(1), den);
        Ratio {
            num: num / g,
            den: den / g,
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StatsReport {
    pub level_vertex_counts: Vec<usize>,
    pub level_edge_counts: Vec<usize>,
    /// Per level: degree -> number of vertices of that degree.
    pub degree_histograms: Vec<BTreeMap<usize, usize>>,
    /// Successive vertex-count ratios, level n to level n+1.
    pub growth_ratios: Vec<Ratio>,
}

pub fn stats(h: &HistoryGraph) -> StatsReport {
    let level_vertex_counts: Vec<usize> = h.levels.iter().map(|l| l.vertex_count()).collect();
    let level_edge_counts: Vec<usize> = h.levels.iter().map(|l| l.edge_count()).collect();
    let degree_histograms = h
        .levels
        .iter()
        .map(|l| {
            let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
            for v in l.vertex_ids() {
                *hist.entry(l.degree(v)).or_insert(0) += 1;
            }
            hist
        })
        .collect();
    let growth_ratios = level_vertex_counts
        .windows(2)
        .map(|w| Ratio::new(w[1] as u64, w[0] as u64))
        .collect();
    StatsReport {
        level_vertex_counts,
        level_edge_counts,
        degree_histograms,
        growth_ratios,
    }
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "level  vertices  edges  degrees")?;
        for (n, (vc, ec)) in self
            .level_vertex_counts
            .iter()
            .zip(&self.level_edge_counts)
            .enumerate()
        {
            let degrees: Vec<String> = self.degree_histograms[n]
                .iter()
                .map(|(d, c)| format!("{d}:{c}"))
                .collect();
            writeln!(f, "{n:<6} {vc:<9} {ec:<6} {}", degrees.join(" "))?;
        }
        let ratios: Vec<String> = self.growth_ratios.iter().map(|r| r.to_string()).collect();
        writeln!(f, "growth ratios: [{}]", ratios.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::history::build_history;

    #[test]
    fn cycdb_ratios() {
        let h = build_history(&gallery::cycdb(), 5).unwrap();
        let s = stats(&h);
        let expected: Vec<Ratio> = [3, 2, 2, 2, 2].iter().map(|&n| Ratio::new(n, 1)).collect();
        assert_eq!(s.growth_ratios, expected);
    }

    #[test]
    fn ident_ratios() {
        let h = build_history(&gallery::ident(), 4).unwrap();
        let s = stats(&h);
        let expected: Vec<Ratio> = [3, 1, 1, 1].iter().map(|&n| Ratio::new(n, 1)).collect();
        assert_eq!(s.growth_ratios, expected);
    }

    #[test]
    fn counts_match_the_graph() {
        let h = build_history(&gallery::cycdb(), 4).unwrap();
        let s = stats(&h);
        assert_eq!(s.level_vertex_counts, h.level_sizes());
        for (n, level) in h.levels.iter().enumerate() {
            assert_eq!(s.level_edge_counts[n], level.edge_count());
            let total: usize = s.degree_histograms[n].values().sum();
            assert_eq!(total, level.vertex_count());
        }
    }

    #[test]
    fn non_integer_ratios_reduce() {
        assert_eq!(Ratio::new(6, 4), Ratio { num: 3, den: 2 });
        assert_eq!(Ratio::new(6, 4).to_string(), "3/2");
        assert_eq!(Ratio::new(8, 2).to_string(), "4");
    }
}
