use std::collections::BTreeSet;

use super::VoronoiDiagram;
use crate::{Error, Result};

/// Site adjacency from face-neighbouring grid cells with different owners.
/// Neighbour lists are sorted ascending.
pub fn face_adjacency<const D: usize>(diagram: &VoronoiDiagram<D>) -> Vec<Vec<usize>> {
    let n = diagram.sites().len();
    let res = diagram.resolution();
    let own = diagram.ownership();
    let mut sets = vec![BTreeSet::new(); n];
    let mut stride = 1usize;
    for _ in 0..D {
        for (i, &a) in own.iter().enumerate() {
            let coord = (i / stride) % res;
            if coord + 1 < res {
                let b = own[i + stride];
                if a != b {
                    sets[a as usize].insert(b as usize);
                    sets[b as usize].insert(a as usize);
                }
            }
        }
        stride *= res;
    }
    sets.into_iter().map(|s| s.into_iter().collect()).collect()
}

/// Greedy Voronoi cell clustering under a maximum cluster volume.
///
/// Sites are visited in ascending cell volume (ties by index). A visited
/// site's cluster merges into the adjacent cluster with the smallest label
/// that can absorb it without exceeding `max_volume`; the remaining adjacent
/// clusters then join it, smallest first, while the cap allows. Labels are
/// renumbered to `0..k` in order of first appearance by site index.
pub fn voronoi_cluster<const D: usize>(
    diagram: &VoronoiDiagram<D>,
    max_volume: f64,
) -> Result<Vec<usize>> {
    if !(max_volume > 0.0) {
        return Err(Error::invalid(format!("max_volume must be positive, got {max_volume}")));
    }
    let adjacency = face_adjacency(diagram);
    let volumes = diagram.measures();
    let n = volumes.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| volumes[a].total_cmp(&volumes[b]).then(a.cmp(&b)));

    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut cluster_volume: Vec<f64> = Vec::new();
    let fits = |a: f64, b: f64| a + b <= max_volume * (1.0 + 1e-12);

    for &s in &order {
        let mut current = match label[s] {
            Some(l) => l,
            None => {
                cluster_volume.push(volumes[s]);
                let l = cluster_volume.len() - 1;
                label[s] = Some(l);
                l
            }
        };
        let neighbour_labels = |label: &[Option<usize>], current: usize| -> Vec<usize> {
            let set: BTreeSet<usize> = adjacency[s]
                .iter()
                .filter_map(|&nb| label[nb])
                .filter(|&l| l != current)
                .collect();
            set.into_iter().collect()
        };

        for target in neighbour_labels(&label, current) {
            if fits(cluster_volume[target], cluster_volume[current]) {
                relabel(&mut label, &mut cluster_volume, current, target);
                current = target;
                break;
            }
        }

        let mut others = neighbour_labels(&label, current);
        others.sort_by(|&a, &b| cluster_volume[a].total_cmp(&cluster_volume[b]).then(a.cmp(&b)));
        for other in others {
            if fits(cluster_volume[current], cluster_volume[other]) {
                relabel(&mut label, &mut cluster_volume, other, current);
            }
        }
    }

    let mut remap = std::collections::HashMap::new();
    Ok(label
        .into_iter()
        .map(|l| {
            let l = l.expect("every site is visited");
            let next = remap.len();
            *remap.entry(l).or_insert(next)
        })
        .collect())
}

fn relabel(label: &mut [Option<usize>], volume: &mut [f64], from: usize, to: usize) {
    for l in label.iter_mut() {
        if *l == Some(from) {
            *l = Some(to);
        }
    }
    volume[to] += volume[from];
    volume[from] = 0.0;
}
