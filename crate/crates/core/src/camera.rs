//! Down-facing pinhole camera.
//!
//! Pixel coordinates are signed and centered on the image: `X` grows with the
//! camera/UAV `x` axis and `Y` with `y`. With the principal point at the
//! origin a ground point `(x, y)` seen from altitude `z` lands on
//! `X = Gx·x/z`, `Y = Gy·y/z`, where `Gx = f/Δx` and `Gy = f/Δy`.
//! Whether a pixel is inside the sensor is a separate question answered by
//! [`CameraModel::in_frame`]; coordinates are never clamped.

use crate::{Error, Result};

/// A point on the image plane, in pixels relative to the image center.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PixelPoint {
    pub x: f64,
    pub y: f64,
}

impl PixelPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &PixelPoint) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }
}

/// A point on the ground plane in meters, expressed in the camera frame
/// (which coincides with the UAV frame).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroundPoint {
    pub x: f64,
    pub y: f64,
}

impl GroundPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &GroundPoint) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }
}

/// Intrinsics of the nadir camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    /// Focal length `f`, meters.
    pub focal_length: f64,
    /// Pixel pitch `Δx`, meters per pixel.
    pub pixel_pitch_x: f64,
    /// Pixel pitch `Δy`, meters per pixel.
    pub pixel_pitch_y: f64,
    /// Principal point `X0`, pixels.
    pub principal_x: f64,
    /// Principal point `Y0`, pixels.
    pub principal_y: f64,
    pub width_px: u32,
    pub height_px: u32,
}

impl Default for CameraModel {
    /// 4 mm lens on 8 µm pixels (`Gx = Gy = 500 px`), 640×480 sensor.
    fn default() -> Self {
        Self {
            focal_length: 0.004,
            pixel_pitch_x: 8e-6,
            pixel_pitch_y: 8e-6,
            principal_x: 0.0,
            principal_y: 0.0,
            width_px: 640,
            height_px: 480,
        }
    }
}

impl CameraModel {
    /// A camera with the given gains, keeping the default focal length.
    pub fn with_gains(gain_x: f64, gain_y: f64) -> Result<Self> {
        let base = Self::default();
        let cam = Self {
            pixel_pitch_x: base.focal_length / gain_x,
            pixel_pitch_y: base.focal_length / gain_y,
            ..base
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.focal_length > 0.0 && self.focal_length.is_finite()) {
            return Err(Error::param("f", "must be positive and finite"));
        }
        if !(self.pixel_pitch_x > 0.0 && self.pixel_pitch_x.is_finite()) {
            return Err(Error::param("delta_x", "must be positive and finite"));
        }
        if !(self.pixel_pitch_y > 0.0 && self.pixel_pitch_y.is_finite()) {
            return Err(Error::param("delta_y", "must be positive and finite"));
        }
        if !self.principal_x.is_finite() {
            return Err(Error::param("X0", "must be finite"));
        }
        if !self.principal_y.is_finite() {
            return Err(Error::param("Y0", "must be finite"));
        }
        if self.width_px == 0 {
            return Err(Error::param("image_width", "must be positive"));
        }
        if self.height_px == 0 {
            return Err(Error::param("image_height", "must be positive"));
        }
        Ok(())
    }

    /// `Gx = f/Δx`.
    pub fn gain_x(&self) -> f64 {
        self.focal_length / self.pixel_pitch_x
    }

    /// `Gy = f/Δy`.
    pub fn gain_y(&self) -> f64 {
        self.focal_length / self.pixel_pitch_y
    }

    pub fn principal_point(&self) -> PixelPoint {
        PixelPoint::new(self.principal_x, self.principal_y)
    }

    pub fn half_width(&self) -> f64 {
        f64::from(self.width_px) / 2.0
    }

    pub fn half_height(&self) -> f64 {
        f64::from(self.height_px) / 2.0
    }

    /// True when the pixel falls on the sensor (edges inclusive).
    pub fn in_frame(&self, p: &PixelPoint) -> bool {
        p.x.is_finite()
            && p.y.is_finite()
            && p.x.abs() <= self.half_width()
            && p.y.abs() <= self.half_height()
    }

    /// Ground point to pixel at altitude `z`.
    pub fn project(&self, p: &GroundPoint, z: f64) -> Result<PixelPoint> {
        check_altitude(z)?;
        Ok(PixelPoint {
            x: self.gain_x() * p.x / z + self.principal_x,
            y: self.gain_y() * p.y / z + self.principal_y,
        })
    }

    /// Pixel to ground point at altitude `z`; inverse of [`project`](Self::project).
    pub fn backproject(&self, p: &PixelPoint, z: f64) -> Result<GroundPoint> {
        check_altitude(z)?;
        Ok(GroundPoint {
            x: (p.x - self.principal_x) * z / self.gain_x(),
            y: (p.y - self.principal_y) * z / self.gain_y(),
        })
    }

    /// Altitude from the pixel separation of two markers a known `marker_gap`
    /// meters apart on the ground.
    ///
    /// Each pixel axis is scaled by its own gain, so for square pixels this is
    /// `Gx·L / |Rc − Rh|`.
    pub fn estimate_altitude(&self, rc: &PixelPoint, rh: &PixelPoint, marker_gap: f64) -> Result<f64> {
        let nx = (rh.x - rc.x) / self.gain_x();
        let ny = (rh.y - rc.y) / self.gain_y();
        let normalized = libm::hypot(nx, ny);
        if !(normalized > 0.0) {
            return Err(Error::CoincidentMarkers);
        }
        Ok(marker_gap / normalized)
    }
}

fn check_altitude(z: f64) -> Result<()> {
    if z > 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveAltitude(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cam500() -> CameraModel {
        CameraModel::with_gains(500.0, 500.0).unwrap()
    }

    #[test]
    fn default_gains_are_500() {
        let cam = CameraModel::default();
        assert_abs_diff_eq!(cam.gain_x(), 500.0, epsilon = 1e-9);
        assert_abs_diff_eq!(cam.gain_y(), 500.0, epsilon = 1e-9);
        assert_eq!(cam.principal_point(), PixelPoint::new(0.0, 0.0));
    }

    #[test]
    fn project_examples() {
        let cam = cam500();
        let p = cam.project(&GroundPoint::new(0.0, 0.0), 3.0).unwrap();
        assert_eq!(p, PixelPoint::new(0.0, 0.0));

        let p = cam.project(&GroundPoint::new(1.0, 0.0), 2.0).unwrap();
        assert_abs_diff_eq!(p.x, 250.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-12);

        let p = cam.project(&GroundPoint::new(-0.6, 0.9), 3.0).unwrap();
        assert_abs_diff_eq!(p.x, -100.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.y, 150.0, epsilon = 1e-9);
    }

    #[test]
    fn backproject_examples() {
        let cam = cam500();
        let g = cam.backproject(&PixelPoint::new(0.0, 0.0), 3.0).unwrap();
        assert_eq!(g, GroundPoint::new(0.0, 0.0));
        let g = cam.backproject(&PixelPoint::new(250.0, 0.0), 2.0).unwrap();
        assert_abs_diff_eq!(g.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn non_positive_altitude_is_rejected() {
        let cam = cam500();
        for z in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                cam.project(&GroundPoint::default(), z),
                Err(Error::NonPositiveAltitude(_))
            ));
            assert!(matches!(
                cam.backproject(&PixelPoint::default(), z),
                Err(Error::NonPositiveAltitude(_))
            ));
        }
    }

    #[test]
    fn altitude_from_marker_gap() {
        let cam = cam500();
        let rc = PixelPoint::new(0.0, 0.0);
        let z = cam.estimate_altitude(&rc, &PixelPoint::new(25.0, 0.0), 0.15).unwrap();
        assert_abs_diff_eq!(z, 3.0, epsilon = 1e-12);
        let z = cam.estimate_altitude(&rc, &PixelPoint::new(0.0, 50.0), 0.15).unwrap();
        assert_abs_diff_eq!(z, 1.5, epsilon = 1e-12);
        assert_eq!(cam.estimate_altitude(&rc, &rc, 0.15), Err(Error::CoincidentMarkers));
    }

    #[test]
    fn anisotropic_altitude_weights_each_axis() {
        let cam = CameraModel::with_gains(500.0, 250.0).unwrap();
        // 0.15 m gap along y at 3 m shows up as 12.5 px with Gy = 250.
        let z = cam
            .estimate_altitude(&PixelPoint::new(0.0, 0.0), &PixelPoint::new(0.0, 12.5), 0.15)
            .unwrap();
        assert_abs_diff_eq!(z, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn frame_bounds_are_inclusive() {
        let cam = cam500();
        assert!(cam.in_frame(&PixelPoint::new(320.0, -240.0)));
        assert!(!cam.in_frame(&PixelPoint::new(320.5, 0.0)));
        assert!(!cam.in_frame(&PixelPoint::new(0.0, f64::NAN)));
    }

    #[test]
    fn invalid_intrinsics_are_rejected() {
        let cam = CameraModel { focal_length: 0.0, ..CameraModel::default() };
        assert!(cam.validate().is_err());
        let cam = CameraModel { pixel_pitch_y: -1e-6, ..CameraModel::default() };
        assert!(cam.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn backproject_inverts_project(
            x in -20.0f64..20.0, y in -20.0f64..20.0, z in 0.2f64..30.0,
            x0 in -5.0f64..5.0, y0 in -5.0f64..5.0,
        ) {
            let cam = CameraModel { principal_x: x0, principal_y: y0, ..cam500() };
            let g = GroundPoint::new(x, y);
            let back = cam.backproject(&cam.project(&g, z).unwrap(), z).unwrap();
            prop_assert!((back.x - x).abs() < 1e-9);
            prop_assert!((back.y - y).abs() < 1e-9);
        }

        #[test]
        fn projection_is_linear_without_offset(
            x in -5.0f64..5.0, y in -5.0f64..5.0, a in -4.0f64..4.0, z in 0.5f64..10.0,
        ) {
            let cam = cam500();
            let p = cam.project(&GroundPoint::new(x, y), z).unwrap();
            let q = cam.project(&GroundPoint::new(a * x, a * y), z).unwrap();
            prop_assert!((q.x - a * p.x).abs() < 1e-9);
            prop_assert!((q.y - a * p.y).abs() < 1e-9);
        }
    }
}
