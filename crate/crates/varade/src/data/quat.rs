//! Euler-angle to quaternion conversion for the IMU orientation channels.

/// Intrinsic Z-Y-X (yaw, pitch, roll) composition; angles in degrees.
/// Returns (w, x, y, z) with unit norm.
pub fn euler_to_quaternion(roll_deg: f64, pitch_deg: f64, yaw_deg: f64) -> (f64, f64, f64, f64) {
    let hr = roll_deg.to_radians() / 2.0;
    let hp = pitch_deg.to_radians() / 2.0;
    let hy = yaw_deg.to_radians() / 2.0;
    let (sr, cr) = hr.sin_cos();
    let (sp, cp) = hp.sin_cos();
    let (sy, cy) = hy.sin_cos();
    let w = cr * cp * cy + sr * sp * sy;
    let x = sr * cp * cy - cr * sp * sy;
    let y = cr * sp * cy + sr * cp * sy;
    let z = cr * cp * sy - sr * sp * cy;
    (w, x, y, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn norm(q: (f64, f64, f64, f64)) -> f64 {
        (q.0 * q.0 + q.1 * q.1 + q.2 * q.2 + q.3 * q.3).sqrt()
    }

    /// Rotation matrix from intrinsic Z-Y-X Euler angles.
    fn euler_matrix(roll: f64, pitch: f64, yaw: f64) -> [[f64; 3]; 3] {
        let (sr, cr) = roll.to_radians().sin_cos();
        let (sp, cp) = pitch.to_radians().sin_cos();
        let (sy, cy) = yaw.to_radians().sin_cos();
        // Rz(yaw) * Ry(pitch) * Rx(roll)
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    }

    fn quat_matrix(q: (f64, f64, f64, f64)) -> [[f64; 3]; 3] {
        let (w, x, y, z) = q;
        [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ]
    }

    #[test]
    fn identity_rotation() {
        let q = euler_to_quaternion(0.0, 0.0, 0.0);
        assert_eq!(q, (1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn half_turn_about_z() {
        let q = euler_to_quaternion(0.0, 0.0, 180.0);
        assert!((q.0).abs() < 1e-12);
        assert!((q.1).abs() < 1e-12);
        assert!((q.2).abs() < 1e-12);
        assert!((q.3 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_norm_and_rotation_matrix_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let r = rng.gen_range(-180.0..180.0);
            let p = rng.gen_range(-90.0..90.0);
            let y = rng.gen_range(-180.0..180.0);
            let q = euler_to_quaternion(r, p, y);
            assert!((norm(q) - 1.0).abs() < 1e-6);
            let me = euler_matrix(r, p, y);
            let mq = quat_matrix(q);
            for i in 0..3 {
                for j in 0..3 {
                    assert!(
                        (me[i][j] - mq[i][j]).abs() < 1e-9,
                        "({r},{p},{y}) entry [{i}][{j}]: {} vs {}",
                        me[i][j],
                        mq[i][j]
                    );
                }
            }
        }
    }
}
