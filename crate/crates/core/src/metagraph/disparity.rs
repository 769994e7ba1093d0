//! Disparity-filter backbone extraction for the weighted meta-graph.
//!
//! For an edge (i, j) with weight w seen from endpoint i of strength
//! s_i = sum_k w_ik and degree k_i, the significance is
//! alpha_ij = (1 - w/s_i)^(k_i - 1). The edge survives when it is significant
//! (alpha_ij < alpha) at one endpoint or more. Degree-1 endpoints contribute
//! alpha_ij = 1 and are never significant on their own.

use crate::error::{Error, Result};
use crate::metagraph::MetaGraph;

fn endpoint_significance(weight: f64, strength: f64, degree: usize) -> f64 {
    if degree <= 1 {
        return 1.0;
    }
    (1.0 - weight / strength).powi(degree as i32 - 1)
}

/// Keep edges significant at level `alpha` at one endpoint or more. Nodes are
/// retained even when they lose every incident edge.
pub fn disparity_filter(graph: &MetaGraph, alpha: f64) -> Result<MetaGraph> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", format!("must be in (0, 1), got {alpha}")));
    }
    let node_stats = graph.strengths_and_degrees();
    let mut filtered = graph.clone();
    filtered.edges.retain(|edge| {
        let w = edge.shared_users as f64;
        let (strength_a, degree_a) = node_stats[edge.a as usize];
        let (strength_b, degree_b) = node_stats[edge.b as usize];
        endpoint_significance(w, strength_a, degree_a) < alpha
            || endpoint_significance(w, strength_b, degree_b) < alpha
    });
    Ok(filtered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metagraph::test_support::graph_with_edges;

    #[test]
    fn star_keeps_only_the_heavy_edge() {
        // Center 0 with weights (10, 1, 1, 1): s = 13, k = 4.
        // w=10: (3/13)^3 ~ 0.0123 < 0.05 -> kept. w=1: (12/13)^3 ~ 0.787 -> pruned
        // (leaf sides are degree 1, alpha = 1).
        let g = graph_with_edges(5, &[(0, 1, 10), (0, 2, 1), (0, 3, 1), (0, 4, 1)]);
        let filtered = disparity_filter(&g, 0.05).unwrap();
        assert_eq!(filtered.edge_count(), 1);
        assert_eq!(filtered.edges[0].shared_users, 10);
        assert_eq!(filtered.node_count(), 5);
    }

    #[test]
    fn uniform_triangle_fully_pruned() {
        // Each endpoint: s = 2w, k = 2 -> alpha_ij = (1 - 1/2)^1 = 0.5.
        let g = graph_with_edges(3, &[(0, 1, 4), (1, 2, 4), (0, 2, 4)]);
        let filtered = disparity_filter(&g, 0.2).unwrap();
        assert_eq!(filtered.edge_count(), 0);
        assert_eq!(filtered.node_count(), 3);
    }

    #[test]
    fn alpha_near_one_keeps_every_multi_degree_edge() {
        let g = graph_with_edges(4, &[(0, 1, 3), (0, 2, 1), (1, 3, 2), (2, 3, 5)]);
        let filtered = disparity_filter(&g, 1.0 - 1e-9).unwrap();
        assert_eq!(filtered.edge_count(), g.edge_count());
    }

    #[test]
    fn out_of_range_alpha_rejected() {
        let g = graph_with_edges(2, &[(0, 1, 1)]);
        assert!(disparity_filter(&g, 0.0).is_err());
        assert!(disparity_filter(&g, 1.0).is_err());
        assert!(disparity_filter(&g, -0.5).is_err());
    }

    proptest::proptest! {
        // Filtering never invents edges, and raising alpha only adds kept
        // edges.
        #[test]
        fn filter_is_subset_and_monotone_in_alpha(
            edges in proptest::collection::vec((0u32..12, 0u32..12, 1u32..20), 1..60),
            lo in 0.05f64..0.45,
            hi in 0.5f64..0.95,
        ) {
            let edges: Vec<(u32, u32, u32)> = edges
                .into_iter()
                .filter(|&(a, b, _)| a != b)
                .collect();
            let mut deduped: Vec<(u32, u32, u32)> = Vec::new();
            for (a, b, w) in edges {
                let key = (a.min(b), a.max(b));
                if !deduped.iter().any(|&(x, y, _)| (x, y) == key) {
                    deduped.push((key.0, key.1, w));
                }
            }
            let graph = graph_with_edges(12, &deduped);
            let kept_lo = disparity_filter(&graph, lo).unwrap();
            let kept_hi = disparity_filter(&graph, hi).unwrap();
            let set = |g: &crate::metagraph::MetaGraph| -> std::collections::HashSet<(u32, u32)> {
                g.edges.iter().map(|e| (e.a, e.b)).collect()
            };
            let all = set(&graph);
            let lo_set = set(&kept_lo);
            let hi_set = set(&kept_hi);
            proptest::prop_assert!(lo_set.is_subset(&all));
            proptest::prop_assert!(hi_set.is_subset(&all));
            proptest::prop_assert!(lo_set.is_subset(&hi_set));
        }
    }

    #[test]
    fn worked_significance_values() {
        let alpha_heavy = endpoint_significance(10.0, 13.0, 4);
        assert!((alpha_heavy - (3.0f64 / 13.0).powi(3)).abs() < 1e-15);
        let alpha_light = endpoint_significance(1.0, 13.0, 4);
        assert!((alpha_light - (12.0f64 / 13.0).powi(3)).abs() < 1e-15);
        assert_eq!(endpoint_significance(7.0, 7.0, 1), 1.0);
    }
}
