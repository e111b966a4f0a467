/// Quaternion `w + x i + y j + z k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub const IDENTITY: Quat = Quat { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn mul(&self, o: &Quat) -> Quat {
        Quat {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }

    pub fn conj(&self) -> Quat {
        Quat { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(&self) -> Quat {
        let n = self.norm();
        Quat { w: self.w / n, x: self.x / n, y: self.y / n, z: self.z / n }
    }

    /// `cos(|v|/2) + sin(|v|/2) v/|v|`.
    pub fn exp(v: [f64; 3]) -> Quat {
        let t = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let half = 0.5 * t;
        // sin(t/2)/t, with its series near zero
        let s = if t < 1e-6 { 0.5 - t * t / 48.0 } else { half.sin() / t };
        Quat { w: half.cos(), x: s * v[0], y: s * v[1], z: s * v[2] }
    }

    /// Inverse of [`Quat::exp`] with rotation angle in `[0, 2 pi)`; `None` at `-1`.
    pub fn log(&self) -> Option<[f64; 3]> {
        let vn = (self.x * self.x + self.y * self.y + self.z * self.z).sqrt();
        if self.w < 0.0 && vn < 1e-12 {
            return None;
        }
        let t = 2.0 * vn.atan2(self.w);
        let s = if vn < 1e-12 { 2.0 / self.w } else { t / vn };
        Some([s * self.x, s * self.y, s * self.z])
    }

    /// `q (0, v) q^{-1}` for a unit quaternion.
    pub fn rotate(&self, v: [f64; 3]) -> [f64; 3] {
        let p = Quat { w: 0.0, x: v[0], y: v[1], z: v[2] };
        let r = self.mul(&p).mul(&self.conj());
        [r.x, r.y, r.z]
    }
}
