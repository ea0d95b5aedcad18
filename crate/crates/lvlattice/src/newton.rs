//! Newton polygons of plane curves: convex hull of the exponent support and
//! the interior lattice count, which equals the genus for generic
//! coefficients.

/// Convex hull of the support of a bivariate polynomial, with the lattice
/// points strictly inside it.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonPolygon {
    pub support: Vec<(i64, i64)>,
    /// Hull vertices in counterclockwise order, no repeated endpoint.
    pub hull: Vec<(i64, i64)>,
    pub interior: Vec<(i64, i64)>,
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn convex_hull(points: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut pts: Vec<(i64, i64)> = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<(i64, i64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(i64, i64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

impl NewtonPolygon {
    pub fn from_support(support: Vec<(i64, i64)>) -> Self {
        let hull = convex_hull(&support);
        let interior = if hull.len() < 3 {
            Vec::new()
        } else {
            let min_x = hull.iter().map(|p| p.0).min().unwrap();
            let max_x = hull.iter().map(|p| p.0).max().unwrap();
            let min_y = hull.iter().map(|p| p.1).min().unwrap();
            let max_y = hull.iter().map(|p| p.1).max().unwrap();
            let mut inside = Vec::new();
            for x in min_x + 1..max_x {
                for y in min_y + 1..max_y {
                    let strictly_in = (0..hull.len()).all(|i| {
                        let a = hull[i];
                        let b = hull[(i + 1) % hull.len()];
                        cross(a, b, (x, y)) > 0
                    });
                    if strictly_in {
                        inside.push((x, y));
                    }
                }
            }
            inside
        };
        NewtonPolygon { support, hull, interior }
    }

    /// Interior lattice count; the geometric genus of a curve with this
    /// polygon and generic coefficients.
    pub fn genus(&self) -> usize {
        self.interior.len()
    }

    /// Exponent pairs (a-1, b-1) of the numerators z^(a-1) w^(b-1) of a basis
    /// of holomorphic one-forms, one per interior point (a, b).
    pub fn one_form_exponents(&self) -> Vec<(u32, u32)> {
        self.interior.iter().map(|&(a, b)| ((a - 1) as u32, (b - 1) as u32)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Triangle (0,0),(3,0),(0,3): one interior point (1,1). Genus of a smooth
    // plane cubic.
    #[test]
    fn plane_cubic_triangle() {
        let np = NewtonPolygon::from_support(vec![(0, 0), (3, 0), (0, 3), (1, 1), (2, 0)]);
        assert_eq!(np.genus(), 1);
        assert_eq!(np.interior, vec![(1, 1)]);
    }

    // Hyperelliptic support w^2 = z^5 + ...: points (0,2),(5,0),(0,0).
    // Interior: (1,1),(2,1)? cross-check by hand: the hull is the triangle
    // (0,0),(5,0),(0,2). Line from (5,0) to (0,2): y = 2 - 2x/5, so (1,1)
    // needs 1 < 2 - 0.4 ok; (2,1): 1 < 2 - 0.8 ok; (3,1): 1 < 2 - 1.2 fails.
    // Genus 2, matching a degree-5 hyperelliptic curve.
    #[test]
    fn hyperelliptic_degree_five()
    {
        let np = NewtonPolygon::from_support(vec![(0, 2), (5, 0), (0, 0), (3, 0)]);
        assert_eq!(np.genus(), 2);
        assert_eq!(np.interior, vec![(1, 1), (2, 1)]);
    }

    #[test]
    fn degenerate_support_has_no_interior() {
        let np = NewtonPolygon::from_support(vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!(np.genus(), 0);
        assert!(np.hull.len() < 3);
    }

    #[test]
    fn square_interior() {
        // Unit square scaled by 3: interior (1,1),(1,2),(2,1),(2,2).
        let np = NewtonPolygon::from_support(vec![(0, 0), (3, 0), (0, 3), (3, 3)]);
        assert_eq!(np.genus(), 4);
    }

    #[test]
    fn boundary_points_excluded() {
        let np = NewtonPolygon::from_support(vec![(0, 0), (4, 0), (0, 4)]);
        // Boundary (2,2),(1,3),(3,1) lie on the hypotenuse and must not count.
        assert!(np.interior.iter().all(|&(x, y)| x + y < 4));
        assert_eq!(np.genus(), 3);
    }
}
