use crate::error::{Error, Result};

/// Department names in canonical order.
pub const DEPARTMENTS: [&str; 10] = [
    "Artibonite",
    "Centre",
    "Grand'Anse",
    "Nippes",
    "Nord",
    "Nord-Est",
    "Nord-Ouest",
    "Ouest",
    "Sud",
    "Sud-Est",
];

/// National population used by the single-unit model.
pub const HAITI_POPULATION: f64 = 10_911_819.0;

const POPULATION: [f64; 10] = [
    1_727_524.0, 746_236.0, 468_301.0, 342_525.0, 1_067_177.0, 393_967.0, 728_807.0, 4_029_705.0, 774_976.0,
    632_601.0,
];

const AREA_KM2: [f64; 10] = [4887.0, 3487.0, 1912.0, 1268.0, 2115.0, 1623.0, 2103.0, 4983.0, 2654.0, 2034.0];

/// Approximate department centroids (latitude, longitude).
const CENTROIDS: [(f64, f64); 10] = [
    (19.35, -72.45),
    (19.05, -71.95),
    (18.50, -74.00),
    (18.40, -73.35),
    (19.60, -72.25),
    (19.50, -71.85),
    (19.80, -72.85),
    (18.50, -72.30),
    (18.25, -73.75),
    (18.25, -72.45),
];

/// Populations, densities, distances and river-flow coupling per unit.
#[derive(Clone, Debug, PartialEq)]
pub struct GeographyData {
    pub names: Vec<String>,
    pub population: Vec<f64>,
    /// Persons per km².
    pub density: Vec<f64>,
    /// Row-major `U × U` road-distance measure (km).
    pub distance: Vec<f64>,
    /// Row-major `U × U` river-flow measure.
    pub river: Vec<f64>,
}

impl GeographyData {
    pub fn new(
        names: Vec<String>,
        population: Vec<f64>,
        density: Vec<f64>,
        distance: Vec<f64>,
        river: Vec<f64>,
    ) -> Result<Self> {
        let u = names.len();
        if population.len() != u || density.len() != u || distance.len() != u * u || river.len() != u * u {
            return Err(Error::Dimension(format!("geography for {u} units has inconsistent sizes")));
        }
        for i in 0..u {
            if !(population[i] > 0.0) {
                return Err(Error::Data(format!("population of `{}` must be positive", names[i])));
            }
            if !(density[i] >= 0.0) {
                return Err(Error::Data(format!("density of `{}` must be nonnegative", names[i])));
            }
            for j in 0..u {
                let d = distance[i * u + j];
                let r = river[i * u + j];
                if i == j && (d != 0.0 || r != 0.0) {
                    return Err(Error::Data(format!("diagonal of distance/river matrix at `{}` must be 0", names[i])));
                }
                if i != j && !(d > 0.0) {
                    return Err(Error::Data(format!(
                        "distance `{}` -> `{}` must be positive",
                        names[i], names[j]
                    )));
                }
                if !(r >= 0.0) {
                    return Err(Error::Data(format!("river flow `{}` -> `{}` is negative", names[i], names[j])));
                }
            }
        }
        Ok(Self {
            names,
            population,
            density,
            distance,
            river,
        })
    }

    /// Synthetic ten-department geography: published census-scale
    /// populations and areas, great-circle centroid distances inflated by 1.3
    /// for roads, and a sparse downstream river network.
    pub fn haiti_synthetic() -> Self {
        let u = DEPARTMENTS.len();
        let mut distance = vec![0.0; u * u];
        for i in 0..u {
            for j in 0..u {
                if i != j {
                    distance[i * u + j] = 1.3 * haversine_km(CENTROIDS[i], CENTROIDS[j]);
                }
            }
        }
        let mut river = vec![0.0; u * u];
        // Centre drains into Artibonite; Nord-Est into Nord; Nippes into Sud.
        for (from, to) in [(1, 0), (5, 4), (3, 8)] {
            river[from * u + to] = 1.0;
        }
        let density = POPULATION.iter().zip(AREA_KM2).map(|(p, a)| p / a).collect();
        Self::new(
            DEPARTMENTS.iter().map(|s| s.to_string()).collect(),
            POPULATION.to_vec(),
            density,
            distance,
            river,
        )
        .expect("built-in geography is valid")
    }

    /// One-unit geography with no coupling.
    pub fn single(name: &str, population: f64, density: f64) -> Result<Self> {
        Self::new(vec![name.to_string()], vec![population], vec![density], vec![0.0], vec![0.0])
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::input(format!("unknown department `{name}`")))
    }

    /// Gravity coupling `T_uv = v_rate Pop_u Pop_v / D_uv²`, zero diagonal.
    pub fn gravity(&self, v_rate: f64) -> Vec<f64> {
        let u = self.len();
        let mut t = vec![0.0; u * u];
        for i in 0..u {
            for j in i + 1..u {
                let d = self.distance[i * u + j];
                let v = v_rate * self.population[i] * self.population[j] / (d * d);
                t[i * u + j] = v;
                t[j * u + i] = v;
            }
        }
        t
    }

    /// Restrict to a subset of units, in the given order.
    pub fn select(&self, units: &[usize]) -> Result<Self> {
        let n = self.len();
        let k = units.len();
        let mut distance = vec![0.0; k * k];
        let mut river = vec![0.0; k * k];
        for (a, &i) in units.iter().enumerate() {
            for (b, &j) in units.iter().enumerate() {
                distance[a * k + b] = self.distance[i * n + j];
                river[a * k + b] = self.river[i * n + j];
            }
        }
        Self::new(
            units.iter().map(|&i| self.names[i].clone()).collect(),
            units.iter().map(|&i| self.population[i]).collect(),
            units.iter().map(|&i| self.density[i]).collect(),
            distance,
            river,
        )
    }
}

fn haversine_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    let r = 6371.0;
    let (la1, lo1) = (a.0.to_radians(), a.1.to_radians());
    let (la2, lo2) = (b.0.to_radians(), b.1.to_radians());
    let h = ((la2 - la1) / 2.0).sin().powi(2) + la1.cos() * la2.cos() * ((lo2 - lo1) / 2.0).sin().powi(2);
    2.0 * r * h.sqrt().asin()
}
