use super::Plane;
use alloc::vec::Vec;

/// Halves a chroma plane in both axes by averaging each 2×2 box.
///
/// Boxes on the right and bottom edge of odd-sized planes average only the
/// samples that exist.
pub fn subsample_chroma_420(plane: &Plane) -> Plane {
    let (w, h) = (plane.width.div_ceil(2), plane.height.div_ceil(2));
    let mut data = Vec::with_capacity(w * h);
    for oy in 0..h {
        for ox in 0..w {
            let mut sum = 0u32;
            let mut n = 0u32;
            for y in 2 * oy..(2 * oy + 2).min(plane.height) {
                for x in 2 * ox..(2 * ox + 2).min(plane.width) {
                    sum += plane.at(x, y) as u32;
                    n += 1;
                }
            }
            data.push(((sum + n / 2) / n) as u8);
        }
    }
    Plane {
        width: w,
        height: h,
        data,
    }
}

/// Nearest-neighbour replication of every sample into its 2×2 box, cropped to
/// `width`×`height`.
pub fn upsample_chroma_420(plane: &Plane, width: usize, height: usize) -> Plane {
    let mut data = Vec::with_capacity(width * height);
    for y in 0..height {
        let sy = (y / 2).min(plane.height - 1);
        for x in 0..width {
            data.push(plane.at((x / 2).min(plane.width - 1), sy));
        }
    }
    Plane {
        width,
        height,
        data,
    }
}

/// Triangle-filter upsampling of a 4:2:0 chroma plane: each output sample
/// weighs its source sample 9/16, the horizontal and vertical neighbours on
/// its side 3/16 each and the diagonal one 1/16, with clamped edges.
pub fn upsample_chroma_420_smooth(plane: &Plane, width: usize, height: usize) -> Plane {
    let at = |x: isize, y: isize| {
        let x = x.clamp(0, plane.width as isize - 1) as usize;
        let y = y.clamp(0, plane.height as isize - 1) as usize;
        plane.data[y * plane.width + x] as u32
    };
    let mut data = Vec::with_capacity(width * height);
    for y in 0..height {
        let sy = (y / 2) as isize;
        let ny = if y % 2 == 0 { sy - 1 } else { sy + 1 };
        for x in 0..width {
            let sx = (x / 2) as isize;
            let nx = if x % 2 == 0 { sx - 1 } else { sx + 1 };
            let sum = 9 * at(sx, sy) + 3 * at(nx, sy) + 3 * at(sx, ny) + at(nx, ny);
            data.push(((sum + 8) / 16) as u8);
        }
    }
    Plane {
        width,
        height,
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn box_mean() {
        let p = Plane::new(2, 2, vec![10, 20, 30, 40]).unwrap();
        assert_eq!(subsample_chroma_420(&p).data, vec![25]);
    }

    #[test]
    fn constant_planes_survive() {
        let p = Plane::filled(3, 3, 7);
        let s = subsample_chroma_420(&p);
        assert_eq!((s.width, s.height), (2, 2));
        assert!(s.data.iter().all(|&v| v == 7));
        assert_eq!(upsample_chroma_420(&s, 3, 3), p);
    }

    #[test]
    fn smooth_keeps_constants_and_interpolates() {
        let p = Plane::filled(3, 2, 90);
        assert!(upsample_chroma_420_smooth(&p, 6, 4).data.iter().all(|&v| v == 90));
        let step = Plane::new(2, 1, vec![0, 160]).unwrap();
        let up = upsample_chroma_420_smooth(&step, 4, 1);
        assert_eq!(up.data, vec![0, 40, 120, 160]);
    }

    #[test]
    fn replication() {
        let p = Plane::new(1, 1, vec![25]).unwrap();
        assert_eq!(upsample_chroma_420(&p, 2, 2).data, vec![25; 4]);
    }
}
