use std::collections::HashMap;

use serde::Serialize;

use crate::geometry::{centroid, Point3};
use crate::labels::LabelSpace;
use crate::rng::{sample_uniform, RngStream};
use crate::scene::Scene;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResizeReport {
    pub indices: Vec<usize>,
    pub scale: f64,
}

/// Single-linkage connected components of the points labelled `class`
/// (edges between points closer than or at `threshold`). Components are
/// ordered by their smallest point index; members are sorted.
pub fn cluster_instances(scene: &Scene, class: u32, threshold: f64) -> Vec<Vec<usize>> {
    let members: Vec<usize> = (0..scene.len()).filter(|&i| scene.labels()[i] == class).collect();
    if members.is_empty() {
        return Vec::new();
    }
    let pts = scene.points();
    let cell = |p: &Point3| {
        ((p.x / threshold).floor() as i64, (p.y / threshold).floor() as i64, (p.z / threshold).floor() as i64)
    };
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (slot, &i) in members.iter().enumerate() {
        grid.entry(cell(&pts[i])).or_default().push(slot);
    }

    let mut parent: Vec<usize> = (0..members.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let t2 = threshold * threshold;
    for (slot, &i) in members.iter().enumerate() {
        let (cx, cy, cz) = cell(&pts[i]);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(bucket) = grid.get(&(cx + dx, cy + dy, cz + dz)) else { continue };
                    for &other in bucket {
                        if other <= slot {
                            continue;
                        }
                        let d = pts[i] - pts[members[other]];
                        if d.x * d.x + d.y * d.y + d.z * d.z <= t2 {
                            let (a, b) = (find(&mut parent, slot), find(&mut parent, other));
                            if a != b {
                                parent[a.max(b)] = a.min(b);
                            }
                        }
                    }
                }
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_to_group: HashMap<usize, usize> = HashMap::new();
    for slot in 0..members.len() {
        let root = find(&mut parent, slot);
        let g = *root_to_group.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(members[slot]);
    }
    groups
}

/// Resize-based outlier synthesis: one random instance of `class` is scaled
/// about its centroid by `k ~ Uniform(k_range)` and relabelled `c + 1`.
/// Returns `None` in the report slot when the class is absent.
pub fn resize_existing(
    scene: &Scene,
    class: u32,
    k_range: [f64; 2],
    cluster_threshold: f64,
    labels: LabelSpace,
    rng: &mut RngStream,
) -> (Scene, Option<ResizeReport>) {
    let instances = cluster_instances(scene, class, cluster_threshold);
    if instances.is_empty() {
        return (scene.clone(), None);
    }
    let chosen = &instances[rng.below(instances.len())];
    let k = sample_uniform(rng, k_range[0], k_range[1]).unwrap_or(k_range[0]);

    let members: Vec<Point3> = chosen.iter().map(|&i| scene.points()[i]).collect();
    let c = centroid(&members);
    let mut out = scene.clone();
    for &i in chosen {
        let p = scene.points()[i];
        out.set_point(i, c + (p - c).scale(k), labels.resized_outlier());
    }
    (out, Some(ResizeReport { indices: chosen.clone(), scale: k }))
}
