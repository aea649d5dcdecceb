use crate::error::{Error, Result};
use crate::interaction::Relation;
use crate::math::Vec3;

/// Dense per-(frame, joint) spatial targets.
///
/// An entry is controlled when at least one of its three mask flags is set;
/// distances are measured over the flagged axes only.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialCondition {
    frames: usize,
    joints: usize,
    targets: Vec<Vec3>,
    mask: Vec<[bool; 3]>,
    distance: Vec<f64>,
    relation: Vec<Relation>,
}

impl SpatialCondition {
    pub fn new(frames: usize, joints: usize) -> Self {
        let len = frames * joints;
        Self {
            frames,
            joints,
            targets: vec![[0.0; 3]; len],
            mask: vec![[false; 3]; len],
            distance: vec![0.0; len],
            relation: vec![Relation::Contact; len],
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn joints(&self) -> usize {
        self.joints
    }

    fn index(&self, frame: usize, joint: usize) -> usize {
        assert!(frame < self.frames && joint < self.joints, "entry ({frame}, {joint}) out of range");
        frame * self.joints + joint
    }

    /// Controls all three axes of `(frame, joint)`.
    pub fn set(&mut self, frame: usize, joint: usize, target: Vec3, distance: f64, relation: Relation) -> Result<()> {
        self.set_axes(frame, joint, target, [true; 3], distance, relation)
    }

    pub fn set_axes(
        &mut self,
        frame: usize,
        joint: usize,
        target: Vec3,
        axes: [bool; 3],
        distance: f64,
        relation: Relation,
    ) -> Result<()> {
        if !(distance >= 0.0 && distance.is_finite()) {
            return Err(Error::InvalidArgument(format!("desired distance {distance} must be >= 0")));
        }
        if target.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("target must be finite".into()));
        }
        let i = self.index(frame, joint);
        self.targets[i] = target;
        self.mask[i] = axes;
        self.distance[i] = distance;
        self.relation[i] = relation;
        Ok(())
    }

    pub fn clear(&mut self, frame: usize, joint: usize) {
        let i = self.index(frame, joint);
        self.mask[i] = [false; 3];
    }

    pub fn target(&self, frame: usize, joint: usize) -> Vec3 {
        self.targets[self.index(frame, joint)]
    }

    pub fn mask(&self, frame: usize, joint: usize) -> [bool; 3] {
        self.mask[self.index(frame, joint)]
    }

    pub fn distance(&self, frame: usize, joint: usize) -> f64 {
        self.distance[self.index(frame, joint)]
    }

    pub fn relation(&self, frame: usize, joint: usize) -> Relation {
        self.relation[self.index(frame, joint)]
    }

    pub fn is_controlled(&self, frame: usize, joint: usize) -> bool {
        self.mask(frame, joint).iter().any(|m| *m)
    }

    /// Number of set mask flags (the denominator of the masked mean).
    pub fn mask_count(&self) -> usize {
        self.mask.iter().flatten().filter(|m| **m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.iter().all(|m| !m.iter().any(|v| *v))
    }

    /// Controlled `(frame, joint)` pairs in row-major order.
    pub fn controlled(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.frames * self.joints)
            .filter(|&i| self.mask[i].iter().any(|m| *m))
            .map(|i| (i / self.joints, i % self.joints))
    }

    /// Mask flags as `0.0` / `1.0`, `N x J x 3` row-major.
    pub fn mask_values(&self) -> Vec<f64> {
        self.mask
            .iter()
            .flat_map(|m| m.map(|b| if b { 1.0 } else { 0.0 }))
            .collect()
    }

    pub fn targets(&self) -> &[Vec3] {
        &self.targets
    }

    pub fn distances(&self) -> &[f64] {
        &self.distance
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relation
    }

    pub fn masks(&self) -> &[[bool; 3]] {
        &self.mask
    }

    /// Same controlled entries with new target positions.
    pub fn with_targets(&self, targets: Vec<Vec3>) -> Result<Self> {
        if targets.len() != self.targets.len() {
            return Err(Error::DimensionMismatch {
                what: "target count",
                expected: self.targets.len(),
                got: targets.len(),
            });
        }
        Ok(Self {
            targets,
            ..self.clone()
        })
    }
}
