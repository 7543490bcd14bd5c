//! Allen-Berkley enumeration of shoebox image sources.

use super::RoomConfig;

/// One image source.
#[derive(Debug, Clone, Copy)]
pub(super) struct Image {
    /// Number of wall reflections.
    pub order: usize,
    pub position: [f64; 3],
    /// Distance to the array centre, metres.
    pub distance: f64,
}

/// Visit every image of `source` with at most `max_order` reflections and no
/// farther than `max_dist` from the array centre.
pub(super) fn for_each_image(
    room: &RoomConfig,
    source: [f64; 3],
    max_order: usize,
    max_dist: f64,
    mut visit: impl FnMut(Image),
) {
    let dims = room.dimensions;
    let rx = room.array_center;
    let half_order = (max_order as i64 + 1) / 2;
    let bound = |axis: usize| -> i64 {
        if max_dist.is_finite() {
            let by_dist = ((max_dist + dims[axis]) / (2.0 * dims[axis])).ceil() as i64 + 1;
            half_order.min(by_dist)
        } else {
            half_order
        }
    };
    let (bx, by, bz) = (bound(0), bound(1), bound(2));
    let max_order = max_order as i64;

    for u in 0..2i64 {
        for v in 0..2i64 {
            for w in 0..2i64 {
                for nx in -bx..=bx {
                    let kx = (nx - u).abs() + nx.abs();
                    if kx > max_order {
                        continue;
                    }
                    let px = (1 - 2 * u) as f64 * source[0] + 2.0 * nx as f64 * dims[0];
                    for ny in -by..=by {
                        let ky = kx + (ny - v).abs() + ny.abs();
                        if ky > max_order {
                            continue;
                        }
                        let py = (1 - 2 * v) as f64 * source[1] + 2.0 * ny as f64 * dims[1];
                        for nz in -bz..=bz {
                            let k = ky + (nz - w).abs() + nz.abs();
                            if k > max_order {
                                continue;
                            }
                            let pz = (1 - 2 * w) as f64 * source[2] + 2.0 * nz as f64 * dims[2];
                            let distance = ((px - rx[0]).powi(2)
                                + (py - rx[1]).powi(2)
                                + (pz - rx[2]).powi(2))
                            .sqrt();
                            if distance > max_dist {
                                continue;
                            }
                            visit(Image {
                                order: k as usize,
                                position: [px, py, pz],
                                distance,
                            });
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_order_images_are_the_six_wall_mirrors() {
        let room = RoomConfig::new([4.0, 5.0, 3.0], [1.0, 1.0, 1.0], 0.3);
        let src = [3.0, 2.0, 1.5];
        let mut first = Vec::new();
        let mut direct = 0;
        for_each_image(&room, src, 1, f64::INFINITY, |im| match im.order {
            0 => {
                direct += 1;
                assert_eq!(im.position, src);
            }
            1 => first.push(im.position),
            _ => panic!("order above limit"),
        });
        assert_eq!(direct, 1);
        first.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut expected = vec![
            [-3.0, 2.0, 1.5],
            [5.0, 2.0, 1.5],
            [3.0, -2.0, 1.5],
            [3.0, 8.0, 1.5],
            [3.0, 2.0, -1.5],
            [3.0, 2.0, 4.5],
        ];
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(first, expected);
    }

    #[test]
    fn image_count_per_order() {
        // A shoebox has 4k^2 + 2 images of order k >= 1.
        let room = RoomConfig::new([4.0, 5.0, 3.0], [1.0, 1.0, 1.0], 0.3);
        let mut counts = [0usize; 5];
        for_each_image(&room, [2.0, 2.0, 2.0], 4, f64::INFINITY, |im| {
            counts[im.order] += 1
        });
        assert_eq!(counts, [1, 6, 18, 38, 66]);
    }
}
