//! Classical (Torgerson) multidimensional scaling of sampled hypotheses into
//! the plane, for visualizing how version spaces move and shrink across query
//! rounds: double-center the squared distance matrix, eigendecompose, and
//! scale the top eigenvectors. Coordinates are only meaningful up to
//! orthogonal transforms, so anything quantitative should compare pairwise
//! embedded distances, never raw axes.

use nalgebra::DMatrix;

use crate::core::{self, BayesLabeling, ItemDistribution, LabelingMatrix};
use crate::error::{Error, Result};
use crate::estimators::{self, Ensemble, Provenance};

/// What an embedded point represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    /// One sampled hypothesis.
    Member,
    /// The majority vote of a round's sample: the cluster's center.
    VoteCenter,
    /// The ground-truth labeling.
    Bayes,
}

impl PointKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PointKind::Member => "member",
            PointKind::VoteCenter => "vote",
            PointKind::Bayes => "bayes",
        }
    }
}

/// Identity tag of a row in a distance matrix or an embedded point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointTag {
    pub kind: PointKind,
    /// Run identifier when several runs share one embedding.
    pub group: Option<String>,
    /// Query round the point belongs to; `None` for the ground truth.
    pub round: Option<usize>,
}

/// Symmetric nonnegative distances with a zero diagonal, plus row identities.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    tags: Vec<PointTag>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Validating constructor: symmetry within 1e-12, zero diagonal,
    /// nonnegative entries.
    pub fn from_values(tags: Vec<PointTag>, values: Vec<f64>) -> Result<Self> {
        let k = tags.len();
        if values.len() != k * k {
            return Err(Error::DimensionMismatch(format!(
                "distance buffer has {} entries, expected {k}x{k}",
                values.len()
            )));
        }
        for i in 0..k {
            if values[i * k + i] != 0.0 {
                return Err(Error::InvalidValue(format!("nonzero diagonal at {i}")));
            }
            for j in 0..k {
                let v = values[i * k + j];
                if v < 0.0 || !v.is_finite() {
                    return Err(Error::InvalidValue(format!("distance {v} at ({i},{j})")));
                }
                if (v - values[j * k + i]).abs() > 1e-12 {
                    return Err(Error::InvalidValue(format!("asymmetry at ({i},{j})")));
                }
            }
        }
        Ok(Self { tags, values })
    }

    /// Pairwise disagreement distances between labeled points.
    pub fn from_points(points: &[(PointTag, Vec<u16>)], dist: &ItemDistribution) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidValue("distance matrix needs at least 2 points".into()));
        }
        let k = points.len();
        let mut values = vec![0.0; k * k];
        for i in 0..k {
            for j in i + 1..k {
                let d = core::labelings_disagreement(&points[i].1, &points[j].1, dist);
                values[i * k + j] = d;
                values[j * k + i] = d;
            }
        }
        let tags = points.iter().map(|(t, _)| t.clone()).collect();
        Ok(Self { tags, values })
    }

    pub fn size(&self) -> usize {
        self.tags.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size() + j]
    }

    pub fn tags(&self) -> &[PointTag] {
        &self.tags
    }
}

/// A round's sampled hypotheses as labeled points: every member row plus the
/// empirical vote center.
pub fn round_points(
    group: Option<&str>,
    round: usize,
    ens: &Ensemble,
    labelings: &LabelingMatrix,
) -> Vec<(PointTag, Vec<u16>)> {
    let items: Vec<usize> = (0..labelings.num_items()).collect();
    let vote = estimators::empirical_vote(ens, labelings, &items);
    let mut points: Vec<(PointTag, Vec<u16>)> = ens
        .members()
        .iter()
        .map(|&h| {
            (
                PointTag {
                    kind: PointKind::Member,
                    group: group.map(str::to_owned),
                    round: Some(round),
                },
                labelings.row(h).to_vec(),
            )
        })
        .collect();
    points.push((
        PointTag { kind: PointKind::VoteCenter, group: group.map(str::to_owned), round: Some(round) },
        vote,
    ));
    points
}

/// Points of a materialized ensemble snapshot (every row is a member).
pub fn snapshot_points(
    group: Option<&str>,
    round: usize,
    snapshot: &LabelingMatrix,
) -> Vec<(PointTag, Vec<u16>)> {
    let all = Ensemble::from_members((0..snapshot.num_hypotheses()).collect(), Provenance::External)
        .expect("snapshot has rows");
    round_points(group, round, &all, snapshot)
}

pub fn bayes_point(bayes: &BayesLabeling) -> (PointTag, Vec<u16>) {
    (
        PointTag { kind: PointKind::Bayes, group: None, round: None },
        bayes.as_slice().to_vec(),
    )
}

/// Distances between every tagged hypothesis of the given rounds plus the
/// ground-truth labeling.
pub fn build_distances(
    rounds: &[(usize, &Ensemble)],
    labelings: &LabelingMatrix,
    bayes: &BayesLabeling,
    dist: &ItemDistribution,
) -> Result<DistanceMatrix> {
    let mut points = Vec::new();
    for &(round, ens) in rounds {
        points.extend(round_points(None, round, ens, labelings));
    }
    points.push(bayes_point(bayes));
    DistanceMatrix::from_points(&points, dist)
}

/// Classical MDS: double-center the squared distances, take the top `dim`
/// eigenpairs with nonnegative eigenvalues (negative ones are clipped, which
/// absorbs non-Euclidean inputs), and scale eigenvectors by root eigenvalues.
/// The output is centered at the origin; rank-deficient inputs simply produce
/// zero columns.
pub fn classical_mds(d: &DistanceMatrix, dim: usize) -> Result<Vec<Vec<f64>>> {
    let k = d.size();
    if k < 2 {
        return Err(Error::InvalidValue("embedding needs at least 2 points".into()));
    }
    if dim == 0 {
        return Err(Error::InvalidValue("embedding dimension must be positive".into()));
    }

    // B = -1/2 J D^2 J, expressed through row/column/grand means.
    let sq = |i: usize, j: usize| {
        let v = d.get(i, j);
        v * v
    };
    let mut row_mean = vec![0.0; k];
    let mut grand = 0.0;
    for (i, mean) in row_mean.iter_mut().enumerate() {
        let mut sum = 0.0;
        for j in 0..k {
            sum += sq(i, j);
        }
        *mean = sum / k as f64;
        grand += sum;
    }
    grand /= (k * k) as f64;
    let b = DMatrix::from_fn(k, k, |i, j| {
        -0.5 * (sq(i, j) - row_mean[i] - row_mean[j] + grand)
    });

    let eig = b.symmetric_eigen();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut coords = vec![vec![0.0; dim]; k];
    for (axis, &which) in order.iter().take(dim).enumerate() {
        let lambda = eig.eigenvalues[which].max(0.0);
        let scale = lambda.sqrt();
        let column = eig.eigenvectors.column(which);
        for i in 0..k {
            coords[i][axis] = column[i] * scale;
        }
    }
    // Double centering already zeroes the mean; pin it exactly.
    for axis in 0..dim {
        let mean: f64 = coords.iter().map(|c| c[axis]).sum::<f64>() / k as f64;
        for c in coords.iter_mut() {
            c[axis] -= mean;
        }
    }
    Ok(coords)
}

/// One point of a finished 2-D embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedPoint {
    pub tag: PointTag,
    pub x: f64,
    pub y: f64,
}

/// One query round's sample, grouped for embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundCluster {
    pub group: Option<String>,
    pub round: usize,
    /// Member label rows.
    pub members: Vec<Vec<u16>>,
    /// Empirical vote of the members.
    pub vote: Vec<u16>,
}

impl RoundCluster {
    pub fn from_snapshot(group: Option<&str>, round: usize, snapshot: &LabelingMatrix) -> Self {
        let all =
            Ensemble::from_members((0..snapshot.num_hypotheses()).collect(), Provenance::External)
                .expect("snapshot has rows");
        let items: Vec<usize> = (0..snapshot.num_items()).collect();
        let vote = estimators::empirical_vote(&all, snapshot, &items);
        let members = (0..snapshot.num_hypotheses()).map(|h| snapshot.row(h).to_vec()).collect();
        Self { group: group.map(str::to_owned), round, members, vote }
    }

    fn tagged_points(&self) -> Vec<(PointTag, Vec<u16>)> {
        let mut points: Vec<(PointTag, Vec<u16>)> = self
            .members
            .iter()
            .map(|row| {
                (
                    PointTag {
                        kind: PointKind::Member,
                        group: self.group.clone(),
                        round: Some(self.round),
                    },
                    row.clone(),
                )
            })
            .collect();
        points.push((
            PointTag {
                kind: PointKind::VoteCenter,
                group: self.group.clone(),
                round: Some(self.round),
            },
            self.vote.clone(),
        ));
        points
    }
}

/// Embeds round clusters plus the ground truth into the plane.
///
/// With `center_per_round` the vote centers and the truth are embedded
/// globally first, then each round's cluster is embedded on its own and
/// translated onto its center: local shapes stay readable when clusters are
/// far apart. Otherwise a single joint embedding is returned.
pub fn embed_clusters(
    clusters: &[RoundCluster],
    bayes: &BayesLabeling,
    dist: &ItemDistribution,
    center_per_round: bool,
) -> Result<Vec<EmbeddedPoint>> {
    if clusters.is_empty() {
        return Err(Error::InvalidValue("embedding needs at least one round cluster".into()));
    }
    if !center_per_round {
        let mut points = Vec::new();
        for cluster in clusters {
            points.extend(cluster.tagged_points());
        }
        points.push(bayes_point(bayes));
        let d = DistanceMatrix::from_points(&points, dist)?;
        let coords = classical_mds(&d, 2)?;
        return Ok(points
            .into_iter()
            .zip(coords)
            .map(|((tag, _), c)| EmbeddedPoint { tag, x: c[0], y: c[1] })
            .collect());
    }

    // Global layout of the centers and the truth.
    let mut center_points: Vec<(PointTag, Vec<u16>)> = clusters
        .iter()
        .map(|cl| {
            (
                PointTag {
                    kind: PointKind::VoteCenter,
                    group: cl.group.clone(),
                    round: Some(cl.round),
                },
                cl.vote.clone(),
            )
        })
        .collect();
    center_points.push(bayes_point(bayes));
    let d = DistanceMatrix::from_points(&center_points, dist)?;
    let center_coords = classical_mds(&d, 2)?;

    let mut out = Vec::new();
    for (ci, cluster) in clusters.iter().enumerate() {
        let anchor = &center_coords[ci];
        let points = cluster.tagged_points();
        if points.len() < 2 {
            // A lone vote point sits exactly at its global position.
            out.push(EmbeddedPoint {
                tag: points[0].0.clone(),
                x: anchor[0],
                y: anchor[1],
            });
            continue;
        }
        let local_d = DistanceMatrix::from_points(&points, dist)?;
        let local = classical_mds(&local_d, 2)?;
        // The vote center is the last local point; translate it onto its
        // global coordinates.
        let vote_local = local.last().expect("cluster has points");
        let (dx, dy) = (anchor[0] - vote_local[0], anchor[1] - vote_local[1]);
        for ((tag, _), c) in points.into_iter().zip(local) {
            out.push(EmbeddedPoint { tag, x: c[0] + dx, y: c[1] + dy });
        }
    }
    out.push(EmbeddedPoint {
        tag: PointTag { kind: PointKind::Bayes, group: None, round: None },
        x: center_coords.last().expect("bayes center")[0],
        y: center_coords.last().expect("bayes center")[1],
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{ItemDistribution, VersionSpaceMask};
    use crate::estimators::draw_ensemble;
    use crate::measures::MeasureContext;
    use crate::testutil::fixture_a;

    fn plain_tags(k: usize) -> Vec<PointTag> {
        (0..k)
            .map(|_| PointTag { kind: PointKind::Member, group: None, round: Some(0) })
            .collect()
    }

    fn embedded_distance(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    #[test]
    fn fixture_distances_include_truth() {
        let (m, _, dist) = fixture_a();
        let bayes = crate::core::BayesLabeling::of_row(&m, 2);
        let ens = Ensemble::from_members(vec![0, 1, 2], Provenance::ExactSampler).unwrap();
        let d = build_distances(&[(0, &ens)], &m, &bayes, &dist).unwrap();
        // Points: h0, h1, h2, vote (0,1) = h1, bayes = h2.
        assert_eq!(d.size(), 5);
        assert!((d.get(0, 1) - 0.5).abs() < 1e-15);
        assert!((d.get(0, 2) - 1.0).abs() < 1e-15);
        assert!((d.get(1, 2) - 0.5).abs() < 1e-15);
        // The truth coincides with h2.
        assert_eq!(d.get(2, 4), 0.0);
        // Symmetry and zero diagonal by construction.
        for i in 0..5 {
            assert_eq!(d.get(i, i), 0.0);
            for j in 0..5 {
                assert_eq!(d.get(i, j), d.get(j, i));
            }
        }
    }

    #[test]
    fn identical_rows_embed_at_the_origin() {
        let snapshot =
            LabelingMatrix::from_rows(vec![vec![1, 0], vec![1, 0], vec![1, 0]], 2).unwrap();
        let dist = ItemDistribution::uniform(2);
        let points = snapshot_points(None, 0, &snapshot);
        let d = DistanceMatrix::from_points(&points, &dist).unwrap();
        let coords = classical_mds(&d, 2).unwrap();
        for c in coords {
            assert!(c[0].abs() < 1e-12 && c[1].abs() < 1e-12);
        }
    }

    #[test]
    fn collinear_distances_are_reproduced_exactly() {
        // The fixture's three hypotheses are collinear: 1/2 + 1/2 = 1.
        let values = vec![
            0.0, 0.5, 1.0, //
            0.5, 0.0, 0.5, //
            1.0, 0.5, 0.0,
        ];
        let d = DistanceMatrix::from_values(plain_tags(3), values).unwrap();
        let coords = classical_mds(&d, 2).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let got = embedded_distance(&coords[i], &coords[j]);
                assert!(
                    (got - d.get(i, j)).abs() < 1e-9,
                    "({i},{j}): got {got}, want {}",
                    d.get(i, j)
                );
            }
        }
    }

    #[test]
    fn unit_square_distances_are_reproduced() {
        let s = 1.0f64;
        let diag = 2.0f64.sqrt();
        let values = vec![
            0.0, s, diag, s, //
            s, 0.0, s, diag, //
            diag, s, 0.0, s, //
            s, diag, s, 0.0,
        ];
        let d = DistanceMatrix::from_values(plain_tags(4), values).unwrap();
        let coords = classical_mds(&d, 2).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let got = embedded_distance(&coords[i], &coords[j]);
                assert!((got - d.get(i, j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn all_zero_distances_embed_at_origin() {
        let d = DistanceMatrix::from_values(plain_tags(4), vec![0.0; 16]).unwrap();
        for c in classical_mds(&d, 2).unwrap() {
            assert_eq!(c, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn from_values_validates() {
        let mut asym = vec![0.0, 0.4, 0.5, 0.0];
        assert!(DistanceMatrix::from_values(plain_tags(2), asym.clone()).is_err());
        asym[2] = 0.4;
        assert!(DistanceMatrix::from_values(plain_tags(2), asym).is_ok());
        assert!(DistanceMatrix::from_values(plain_tags(2), vec![0.1, 0.0, 0.0, 0.0]).is_err());
        assert!(DistanceMatrix::from_values(plain_tags(2), vec![0.0, -0.5, -0.5, 0.0]).is_err());
    }

    #[test]
    fn per_round_centering_pins_votes_to_the_global_layout() {
        let (m, _, dist) = fixture_a();
        let bayes = crate::core::BayesLabeling::of_row(&m, 2);
        let early = LabelingMatrix::from_rows(
            vec![m.row(0).to_vec(), m.row(1).to_vec(), m.row(2).to_vec()],
            2,
        )
        .unwrap();
        let late = LabelingMatrix::from_rows(vec![m.row(2).to_vec(), m.row(2).to_vec()], 2).unwrap();
        let clusters = vec![
            RoundCluster::from_snapshot(None, 0, &early),
            RoundCluster::from_snapshot(None, 1, &late),
        ];
        let flat = embed_clusters(&clusters, &bayes, &dist, false).unwrap();
        assert_eq!(flat.len(), 3 + 1 + 2 + 1 + 1);
        let centered = embed_clusters(&clusters, &bayes, &dist, true).unwrap();
        assert_eq!(centered.len(), flat.len());

        // The late cluster's members coincide with the truth, so after
        // centering they sit exactly on the embedded truth.
        let bayes_pt = centered.iter().find(|p| p.tag.kind == PointKind::Bayes).unwrap();
        for p in centered.iter().filter(|p| p.tag.round == Some(1)) {
            assert!((p.x - bayes_pt.x).abs() < 1e-9);
            assert!((p.y - bayes_pt.y).abs() < 1e-9);
        }
    }
}
