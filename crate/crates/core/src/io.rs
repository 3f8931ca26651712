//! CSV readers and writers for data, geography, scenarios, parameters and
//! results.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::forecast::ForecastResult;
use crate::models::{DepartmentCampaign, EfficacyCurve, GeographyData, ScenarioSpec};
use crate::pomp::{standardize_rainfall, ObservationSeries, ParameterSet, Rainfall, Scope, Transform};
use crate::profile::ProfileJob;
use crate::models::scenario::DEFAULT_HORIZON_WEEKS;
use crate::units::{date_to_time, parse_date, time_to_date};

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::Data(format!("cannot create {}: {e}", path.display())))
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str], what: &str) -> Result<()> {
    let got: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if got != expected {
        return Err(Error::Data(format!(
            "{what} header must be `{}`, found `{}`",
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

fn line_of(pos: Option<&csv::Position>) -> u64 {
    pos.map_or(0, csv::Position::line)
}

fn parse_f64(s: &str, line: u64, field: &str) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Data(format!("line {line}: `{field}` value `{s}` is not a number")))
}

/// Order `found` by `expected`, requiring the same set.
fn resolve_units(found: Vec<String>, expected: Option<&[String]>, what: &str) -> Result<Vec<String>> {
    let Some(exp) = expected else { return Ok(found) };
    let missing: Vec<&String> = exp.iter().filter(|e| !found.contains(e)).collect();
    let extra: Vec<&String> = found.iter().filter(|f| !exp.contains(f)).collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(Error::Data(format!(
            "{what} departments differ from the configured units (missing {missing:?}, unexpected {extra:?})"
        )));
    }
    Ok(exp.to_vec())
}

/// Date-by-unit table read from long-format rows.
struct LongTable {
    units: Vec<String>,
    dates: Vec<NaiveDate>,
    cells: HashMap<(NaiveDate, usize), (Option<f64>, u64)>,
}

fn read_long<R: Read>(r: R, header: &[&str], what: &str, allow_na: bool) -> Result<LongTable> {
    let mut rdr = reader(r);
    check_header(&mut rdr, header, what)?;
    let mut units: Vec<String> = Vec::new();
    let mut cells = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(rec.position());
        if rec.len() != 3 {
            return Err(Error::Data(format!("{what} line {line}: expected 3 fields")));
        }
        let date = parse_date(&rec[0]).map_err(|e| Error::Data(format!("{what} line {line}: {e}")))?;
        let unit = match units.iter().position(|u| u == &rec[1]) {
            Some(u) => u,
            None => {
                units.push(rec[1].to_string());
                units.len() - 1
            }
        };
        let value = if allow_na && rec[2].eq_ignore_ascii_case("NA") {
            None
        } else {
            let v = parse_f64(&rec[2], line, header[2])?;
            if v < 0.0 {
                return Err(Error::Data(format!("{what} line {line}: negative {} {v}", header[2])));
            }
            Some(v)
        };
        if let Some((_, first)) = cells.insert((date, unit), (value, line)) {
            return Err(Error::Data(format!(
                "{what}: duplicate entry for {date} `{}` on lines {first} and {line}",
                units[unit]
            )));
        }
    }
    let mut dates: Vec<NaiveDate> = cells.keys().map(|k| k.0).collect();
    dates.sort();
    dates.dedup();
    if dates.is_empty() {
        return Err(Error::Data(format!("{what} has no rows")));
    }
    Ok(LongTable { units, dates, cells })
}

impl LongTable {
    /// Series per unit in `order`, failing on absent rows.
    fn columns(&self, order: &[String], what: &str) -> Result<Vec<Vec<Option<f64>>>> {
        let mut absent = Vec::new();
        let cols = order
            .iter()
            .map(|name| {
                let u = self.units.iter().position(|x| x == name).expect("resolved unit");
                self.dates
                    .iter()
                    .map(|d| match self.cells.get(&(*d, u)) {
                        Some((v, _)) => *v,
                        None => {
                            absent.push(format!("{d} `{name}`"));
                            None
                        }
                    })
                    .collect()
            })
            .collect();
        if !absent.is_empty() {
            return Err(Error::Data(format!("{what} has no row for {}", absent.join(", "))));
        }
        Ok(cols)
    }

    /// Require a constant spacing of `days` (or whatever the first gap is).
    fn check_spacing(&self, days: Option<i64>, what: &str) -> Result<i64> {
        let step = match (days, self.dates.get(1)) {
            (Some(d), _) => d,
            (None, Some(d1)) => (*d1 - self.dates[0]).num_days(),
            (None, None) => 1,
        };
        let gaps: Vec<String> = self
            .dates
            .windows(2)
            .filter(|w| (w[1] - w[0]).num_days() != step)
            .map(|w| format!("{} -> {}", w[0], w[1]))
            .collect();
        if !gaps.is_empty() {
            return Err(Error::Data(format!(
                "{what} dates are not spaced {step} days apart: {}",
                gaps.join(", ")
            )));
        }
        Ok(step)
    }
}

/// Weekly case counts (`date,department,cases`; `NA` marks missing).
pub fn read_cases<R: Read>(r: R, units: Option<&[String]>) -> Result<ObservationSeries> {
    let t = read_long(r, &["date", "department", "cases"], "cases", true)?;
    t.check_spacing(Some(7), "cases")?;
    let order = resolve_units(t.units.clone(), units, "cases")?;
    let cols = t.columns(&order, "cases")?;
    let times = t.dates.iter().map(|d| date_to_time(*d)).collect();
    ObservationSeries::new(order, times, cols)
}

pub fn load_cases(path: &Path, units: Option<&[String]>) -> Result<ObservationSeries> {
    read_cases(open(path)?, units)
}

pub fn write_cases<W: Write>(series: &ObservationSeries, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["date", "department", "cases"])?;
    for (n, t) in series.times().iter().enumerate() {
        let date = time_to_date(*t).to_string();
        for (u, name) in series.unit_names().iter().enumerate() {
            let v = series.get(u, n).map_or_else(|| "NA".to_string(), |v| v.to_string());
            wtr.write_record([date.as_str(), name, &v])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_cases(series: &ObservationSeries, path: &Path) -> Result<()> {
    write_cases(series, create(path)?)
}

/// Rainfall on a regular date grid (`date,department,mm`). Each row holds
/// from its date until the next. Optionally divided by each unit's maximum.
pub fn read_rainfall<R: Read>(r: R, units: &[String], standardize: bool) -> Result<Rainfall> {
    let t = read_long(r, &["date", "department", "mm"], "rainfall", false)?;
    let step = t.check_spacing(None, "rainfall")?;
    let order = resolve_units(t.units.clone(), Some(units), "rainfall")?;
    let cols: Vec<Vec<f64>> = t
        .columns(&order, "rainfall")?
        .into_iter()
        .map(|c| c.into_iter().map(|v| v.expect("rainfall has no NA")).collect())
        .collect();
    let values = if standardize {
        standardize_rainfall(&cols, &order)?
    } else {
        cols
    };
    Ok(Rainfall {
        start: date_to_time(t.dates[0]),
        step: step as f64 / crate::units::DAYS_PER_YEAR,
        values,
        unit_names: order,
    })
}

pub fn load_rainfall(path: &Path, units: &[String], standardize: bool) -> Result<Rainfall> {
    read_rainfall(open(path)?, units, standardize)
}

pub fn write_rainfall<W: Write>(rain: &Rainfall, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["date", "department", "mm"])?;
    let n = rain.values.first().map_or(0, Vec::len);
    for k in 0..n {
        let date = time_to_date(rain.start + k as f64 * rain.step).to_string();
        for (u, name) in rain.unit_names.iter().enumerate() {
            wtr.write_record([date.as_str(), name, &rain.values[u][k].to_string()])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct GeoRow {
    department: String,
    population: f64,
    density: f64,
}

/// `department,population,density` rows in unit order.
pub fn read_populations<R: Read>(r: R) -> Result<(Vec<String>, Vec<f64>, Vec<f64>)> {
    let mut rdr = reader(r);
    check_header(&mut rdr, &["department", "population", "density"], "geography")?;
    let (mut names, mut pop, mut den) = (Vec::new(), Vec::new(), Vec::new());
    for row in rdr.deserialize::<GeoRow>() {
        let row = row?;
        if names.contains(&row.department) {
            return Err(Error::Data(format!("geography lists `{}` twice", row.department)));
        }
        names.push(row.department);
        pop.push(row.population);
        den.push(row.density);
    }
    Ok((names, pop, den))
}

/// Square matrix with a header row and first column of unit names; rows
/// and columns are reordered to `names`.
pub fn read_matrix<R: Read>(r: R, names: &[String], what: &str) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).has_headers(false).from_reader(r);
    let mut records = rdr.records();
    let header = records.next().ok_or_else(|| Error::Data(format!("{what} matrix is empty")))??;
    let cols: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let col_order = resolve_units(cols.clone(), Some(names), what)?;
    let col_idx: Vec<usize> = col_order.iter().map(|n| cols.iter().position(|c| c == n).unwrap()).collect();
    let u = names.len();
    let mut rows: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for rec in records {
        let rec = rec?;
        let line = line_of(rec.position());
        let i = names
            .iter()
            .position(|n| n == &rec[0])
            .ok_or_else(|| Error::Data(format!("{what} line {line}: unknown department `{}`", &rec[0])))?;
        if rec.len() != cols.len() + 1 {
            return Err(Error::Data(format!("{what} line {line}: expected {} values", cols.len())));
        }
        let vals = (1..rec.len()).map(|k| parse_f64(&rec[k], line, &cols[k - 1])).collect::<Result<Vec<_>>>()?;
        if rows.insert(i, col_idx.iter().map(|&c| vals[c]).collect()).is_some() {
            return Err(Error::Data(format!("{what} line {line}: `{}` listed twice", names[i])));
        }
    }
    if rows.len() != u {
        return Err(Error::Data(format!("{what} matrix has {} rows for {u} departments", rows.len())));
    }
    Ok(rows.into_values().flatten().collect())
}

pub fn write_matrix<W: Write>(names: &[String], m: &[f64], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["department".to_string()];
    header.extend(names.iter().cloned());
    wtr.write_record(&header)?;
    for (i, name) in names.iter().enumerate() {
        let mut row = vec![name.clone()];
        row.extend(m[i * names.len()..(i + 1) * names.len()].iter().map(f64::to_string));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn load_geography(populations: &Path, distance: &Path, river: &Path) -> Result<GeographyData> {
    let (names, pop, den) = read_populations(open(populations)?)?;
    let d = read_matrix(open(distance)?, &names, "distance")?;
    let r = read_matrix(open(river)?, &names, "river")?;
    GeographyData::new(names, pop, den, d, r)
}

/// Write the three geography files into `dir`.
pub fn save_geography(geo: &GeographyData, dir: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(create(&dir.join("geography.csv"))?);
    wtr.write_record(["department", "population", "density"])?;
    for i in 0..geo.len() {
        wtr.write_record([geo.names[i].clone(), geo.population[i].to_string(), geo.density[i].to_string()])?;
    }
    wtr.flush()?;
    write_matrix(&geo.names, &geo.distance, create(&dir.join("distance.csv"))?)?;
    write_matrix(&geo.names, &geo.river, create(&dir.join("river.csv"))?)
}

#[derive(Deserialize)]
struct EfficacyRow {
    weeks_since: f64,
    efficacy_1dose: f64,
    efficacy_2dose: f64,
}

pub fn read_efficacy<R: Read>(r: R) -> Result<EfficacyCurve> {
    let mut rdr = reader(r);
    check_header(&mut rdr, &["weeks_since", "efficacy_1dose", "efficacy_2dose"], "efficacy")?;
    let steps = rdr
        .deserialize::<EfficacyRow>()
        .map(|row| row.map(|r| (r.weeks_since, r.efficacy_1dose, r.efficacy_2dose)).map_err(Error::from))
        .collect::<Result<Vec<_>>>()?;
    EfficacyCurve::new(steps)
}

pub fn load_efficacy(path: &Path) -> Result<EfficacyCurve> {
    read_efficacy(open(path)?)
}

#[derive(Deserialize)]
struct ScenarioRow {
    scenario: String,
    department: String,
    start_date: String,
    duration_weeks: String,
    doses_1: String,
    doses_2: String,
}

/// Scenario rows grouped by id in order of first appearance. A row with an
/// empty department declares a scenario without campaigns.
pub fn read_scenarios<R: Read>(r: R) -> Result<Vec<ScenarioSpec>> {
    let mut rdr = reader(r);
    check_header(
        &mut rdr,
        &["scenario", "department", "start_date", "duration_weeks", "doses_1", "doses_2"],
        "scenario",
    )?;
    let mut out: Vec<ScenarioSpec> = Vec::new();
    for (k, row) in rdr.deserialize::<ScenarioRow>().enumerate() {
        let row = row?;
        let line = k as u64 + 2;
        let i = match out.iter().position(|s| s.id == row.scenario) {
            Some(i) => i,
            None => {
                out.push(ScenarioSpec {
                    id: row.scenario.clone(),
                    campaigns: Vec::new(),
                    horizon_weeks: DEFAULT_HORIZON_WEEKS,
                });
                out.len() - 1
            }
        };
        if row.department.is_empty() {
            continue;
        }
        let start = parse_date(&row.start_date).map_err(|e| Error::Data(format!("scenario line {line}: {e}")))?;
        out[i].campaigns.push(DepartmentCampaign {
            department: row.department,
            start: date_to_time(start),
            duration_weeks: parse_f64(&row.duration_weeks, line, "duration_weeks")?,
            doses_one: parse_f64(&row.doses_1, line, "doses_1")?,
            doses_two: parse_f64(&row.doses_2, line, "doses_2")?,
        });
    }
    Ok(out)
}

pub fn load_scenarios(path: &Path) -> Result<Vec<ScenarioSpec>> {
    read_scenarios(open(path)?)
}

pub fn write_scenarios<W: Write>(specs: &[ScenarioSpec], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["scenario", "department", "start_date", "duration_weeks", "doses_1", "doses_2"])?;
    for s in specs {
        if s.campaigns.is_empty() {
            wtr.write_record([s.id.as_str(), "", "", "", "", ""])?;
        }
        for c in &s.campaigns {
            wtr.write_record([
                s.id.clone(),
                c.department.clone(),
                time_to_date(c.start).to_string(),
                c.duration_weeks.to_string(),
                c.doses_one.to_string(),
                c.doses_two.to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct ParamRow {
    name: String,
    value: f64,
    #[serde(default)]
    transform: String,
    #[serde(default)]
    scope: String,
}

/// Natural-scale parameters (`name,value,transform,scope`); the last two
/// columns may be blank.
pub fn read_params<R: Read>(r: R) -> Result<ParameterSet> {
    let mut rdr = reader(r);
    let mut set = ParameterSet::new();
    for row in rdr.deserialize::<ParamRow>() {
        let row = row?;
        if set.get(&row.name).is_some() {
            return Err(Error::Data(format!("parameter `{}` listed twice", row.name)));
        }
        set.insert(&row.name, row.value, Transform::parse(&row.transform)?, Scope::parse(&row.scope)?);
    }
    Ok(set)
}

pub fn load_params(path: &Path) -> Result<ParameterSet> {
    read_params(open(path)?)
}

pub fn write_params<W: Write>(set: &ParameterSet, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["name", "value", "transform", "scope"])?;
    for e in set.entries() {
        wtr.write_record([e.name.clone(), e.value.to_string(), e.transform.as_str().into(), e.scope.to_label()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_params(set: &ParameterSet, path: &Path) -> Result<()> {
    write_params(set, create(path)?)
}

/// Calendar date for `dated` models, raw model time otherwise.
pub fn format_time(t: f64, dated: bool) -> String {
    if dated {
        time_to_date(t).to_string()
    } else {
        t.to_string()
    }
}

/// One row per simulation, week and unit.
pub fn write_forecast<W: Write>(f: &ForecastResult, dated: bool, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let time = if dated { "date" } else { "time" };
    wtr.write_record(["scenario", "sim", time, "unit", "infections", "cases", "eliminated"])?;
    let u = f.unit_names.len();
    for s in 0..f.n_sims() {
        let elim = f.eliminated[s].to_string();
        for (n, t) in f.times.iter().enumerate() {
            let date = format_time(*t, dated);
            for (k, name) in f.unit_names.iter().enumerate() {
                wtr.write_record([
                    f.scenario.as_str(),
                    &s.to_string(),
                    &date,
                    name,
                    &f.infections[s][n * u + k].to_string(),
                    &f.cases[s][n * u + k].to_string(),
                    &elim,
                ])?;
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

/// `parameter,value,replicate,seed,loglik` rows.
pub fn write_profile<W: Write>(jobs: &[ProfileJob], logliks: &[f64], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["parameter", "value", "replicate", "seed", "loglik"])?;
    for (j, ll) in jobs.iter().zip(logliks) {
        wtr.write_record([
            j.parameter.clone(),
            j.value.to_string(),
            j.replicate.to_string(),
            j.seed.to_string(),
            ll.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// `(value, loglik)` points of a profile table; extra columns are ignored.
pub fn read_profile<R: Read>(r: R) -> Result<Vec<(f64, f64)>> {
    #[derive(Deserialize)]
    struct Row {
        value: f64,
        loglik: f64,
    }
    let mut rdr = reader(r);
    rdr.deserialize::<Row>()
        .map(|row| row.map(|r| (r.value, r.loglik)).map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn one_week_three_departments() {
        let csv = "date,department,cases\n2017-01-07,A,3\n2017-01-07,B,NA\n2017-01-07,C,0\n";
        let s = read_cases(csv.as_bytes(), None).unwrap();
        assert_eq!((s.n_units(), s.len()), (3, 1));
        assert_eq!(s.row(0), &[Some(3.0), None, Some(0.0)]);
        let ordered = read_cases(csv.as_bytes(), Some(&names(&["C", "B", "A"]))).unwrap();
        assert_eq!(ordered.row(0), &[Some(0.0), None, Some(3.0)]);
    }

    #[test]
    fn case_validation_names_rows() {
        let neg = "date,department,cases\n2017-01-07,A,3\n2017-01-14,A,-2\n";
        let e = read_cases(neg.as_bytes(), None).unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
        let dup = "date,department,cases\n2017-01-07,A,3\n2017-01-07,A,4\n";
        let e = read_cases(dup.as_bytes(), None).unwrap_err().to_string();
        assert!(e.contains("lines 2 and 3"), "{e}");
        let gap = "date,department,cases\n2017-01-07,A,3\n2017-01-21,A,4\n";
        let e = read_cases(gap.as_bytes(), None).unwrap_err().to_string();
        assert!(e.contains("2017-01-07 -> 2017-01-21"), "{e}");
        let absent = "date,department,cases\n2017-01-07,A,3\n2017-01-14,A,4\n2017-01-07,B,1\n";
        assert!(read_cases(absent.as_bytes(), None).unwrap_err().to_string().contains("2017-01-14 `B`"));
        assert!(read_cases("date,dept,cases\n".as_bytes(), None).is_err());
        assert!(read_cases("date,department,cases\n2017-01-07,A,1\n".as_bytes(), Some(&names(&["A", "B"]))).is_err());
    }

    #[test]
    fn rainfall_grid() {
        let csv = "date,department,mm\n2010-10-01,A,2\n2010-10-02,A,4\n2010-10-01,B,1\n2010-10-02,B,0\n";
        let r = read_rainfall(csv.as_bytes(), &names(&["A", "B"]), true).unwrap();
        assert_eq!(r.values, vec![vec![0.5, 1.0], vec![1.0, 0.0]]);
        assert!((r.step - 1.0 / 365.25).abs() < 1e-15);
        let mut out = Vec::new();
        let raw = read_rainfall(csv.as_bytes(), &names(&["A", "B"]), false).unwrap();
        write_rainfall(&raw, &mut out).unwrap();
        assert_eq!(read_rainfall(out.as_slice(), &names(&["A", "B"]), false).unwrap(), raw);
    }

    #[test]
    fn geography_round_trip() {
        let geo = GeographyData::haiti_synthetic();
        let dir = tempfile::tempdir().unwrap();
        save_geography(&geo, dir.path()).unwrap();
        let back = load_geography(
            &dir.path().join("geography.csv"),
            &dir.path().join("distance.csv"),
            &dir.path().join("river.csv"),
        )
        .unwrap();
        assert_eq!(back, geo);
    }

    #[test]
    fn matrix_rows_may_be_permuted() {
        let csv = "department,B,A\nA,2,0\nB,0,1\n";
        assert_eq!(read_matrix(csv.as_bytes(), &names(&["A", "B"]), "distance").unwrap(), vec![0.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn efficacy_and_scenarios() {
        let e = "weeks_since,efficacy_1dose,efficacy_2dose\n0,0.5,0.6\n52,0,0.6\n";
        assert_eq!(read_efficacy(e.as_bytes()).unwrap().steps().len(), 2);
        let s = "scenario,department,start_date,duration_weeks,doses_1,doses_2\n\
                 V0,,,,,\nX,Centre,2019-01-12,52,100,200\nX,Ouest,2020-01-11,52,10,20\n";
        let specs = read_scenarios(s.as_bytes()).unwrap();
        assert_eq!(specs.len(), 2);
        assert!(specs[0].campaigns.is_empty());
        assert_eq!(specs[1].departments(), vec!["Centre", "Ouest"]);
        let mut out = Vec::new();
        write_scenarios(&specs, &mut out).unwrap();
        assert_eq!(read_scenarios(out.as_slice()).unwrap(), specs);
    }

    #[test]
    fn params_keep_metadata() {
        let csv = "name,value,transform,scope\nbeta_1,2.5,log,unit:0\nrho,0.3,logit,\nz,-1,,\n";
        let p = read_params(csv.as_bytes()).unwrap();
        assert_eq!(p.entry("beta_1").unwrap().scope, Scope::Unit(0));
        assert_eq!(p.entry("rho").unwrap().transform, Transform::Logit);
        assert_eq!(p.entry("z").unwrap().transform, Transform::Identity);
        let mut out = Vec::new();
        write_params(&p, &mut out).unwrap();
        assert_eq!(read_params(out.as_slice()).unwrap(), p);
        assert!(read_params("name,value\na,1\na,2\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn cases_round_trip(
            cells in proptest::collection::vec(proptest::option::of(0u32..100_000), 1..60),
            units in 1usize..4,
            start in 0i64..20_000,
        ) {
            let n = cells.len().div_ceil(units);
            let names: Vec<String> = (0..units).map(|u| format!("d{u}")).collect();
            let origin = NaiveDate::from_ymd_opt(1980, 1, 1).unwrap() + chrono::Duration::days(start);
            let times = (0..n).map(|k| date_to_time(origin + chrono::Duration::days(7 * k as i64))).collect();
            let by_unit = (0..units)
                .map(|u| (0..n).map(|k| cells.get(k * units + u).copied().flatten().map(f64::from)).collect())
                .collect();
            let s = ObservationSeries::new(names.clone(), times, by_unit).unwrap();
            let mut buf = Vec::new();
            write_cases(&s, &mut buf).unwrap();
            prop_assert_eq!(read_cases(buf.as_slice(), Some(&names)).unwrap(), s);
        }
    }
}
