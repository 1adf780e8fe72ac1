use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("{field} must be positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("goal width {goal} must be smaller than table width {width}")]
    GoalTooWide { goal: f64, width: f64 },
    #[error("end-effector y bounds [{min}, {max}] are empty")]
    EmptyWorkspace { min: f64, max: f64 },
}

/// One of the two robots. `Home` owns the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Home,
    Away,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Home, Side::Away];

    pub fn index(self) -> usize {
        match self {
            Side::Home => 0,
            Side::Away => 1,
        }
    }

    pub fn opponent(self) -> Side {
        match self {
            Side::Home => Side::Away,
            Side::Away => Side::Home,
        }
    }
}

/// Table and mallet dimensions. Coordinates are side-local: the own goal line
/// is `x = 0`, the opponent goal line `x = length`, and `y = 0` is the long
/// axis of the table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TableGeometry {
    pub length: f64,
    pub width: f64,
    pub goal_width: f64,
    pub z_table: f64,
    pub puck_radius: f64,
    pub mallet_radius: f64,
    /// Lower bound on the end-effector x coordinate.
    pub ee_x_min: f64,
    pub ee_y_min: f64,
    pub ee_y_max: f64,
    /// Allowed end-effector height deviation from `z_table`.
    pub z_tolerance: f64,
}

impl Default for TableGeometry {
    fn default() -> Self {
        let width = 1.038;
        let mallet_radius = 0.04815;
        Self {
            length: 1.948,
            width,
            goal_width: 0.25,
            z_table: 0.1645,
            puck_radius: 0.03165,
            mallet_radius,
            ee_x_min: mallet_radius,
            ee_y_min: -(width / 2.0 - mallet_radius),
            ee_y_max: width / 2.0 - mallet_radius,
            z_tolerance: 0.02,
        }
    }
}

impl TableGeometry {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let positive = [
            ("length", self.length),
            ("width", self.width),
            ("goal_width", self.goal_width),
            ("z_table", self.z_table),
            ("puck_radius", self.puck_radius),
            ("mallet_radius", self.mallet_radius),
            ("z_tolerance", self.z_tolerance),
        ];
        for (field, value) in positive {
            if !(value > 0.0) {
                return Err(GeometryError::NonPositive { field, value });
            }
        }
        if self.goal_width >= self.width {
            return Err(GeometryError::GoalTooWide { goal: self.goal_width, width: self.width });
        }
        if self.ee_y_min >= self.ee_y_max {
            return Err(GeometryError::EmptyWorkspace { min: self.ee_y_min, max: self.ee_y_max });
        }
        Ok(())
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.width
    }

    /// Largest |y| of the puck centre inside the side walls.
    pub fn puck_y_limit(&self) -> f64 {
        self.half_width() - self.puck_radius
    }

    /// Largest |y| at which the whole puck fits through the goal mouth.
    pub fn goal_mouth_limit(&self) -> f64 {
        0.5 * self.goal_width - self.puck_radius
    }

    /// Map a point between the two side-local frames (an involution).
    pub fn mirror_point(&self, x: f64, y: f64) -> (f64, f64) {
        (self.length - x, -y)
    }

    /// x measured from the table centre, as used by the reward and success definitions.
    pub fn centered_x(&self, x: f64) -> f64 {
        x - 0.5 * self.length
    }

    pub fn contact_distance(&self) -> f64 {
        self.puck_radius + self.mallet_radius
    }

    pub fn inside_ee_bounds(&self, x: f64, y: f64) -> bool {
        x > self.ee_x_min && y > self.ee_y_min && y < self.ee_y_max
    }
}
