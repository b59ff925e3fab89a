//! Reference evapotranspiration physics.
//!
//! Daily FAO-56 style closures: Tetens saturation vapour pressure, the
//! psychrometric constant from surface pressure, log-profile wind reduction,
//! extraterrestrial radiation from solar geometry, a net-longwave estimate,
//! the Penman-Monteith combination equation and the Hargreaves-Samani
//! temperature method. Everything here is a pure function of its arguments.
//!
//! Units follow the agrometeorological convention: temperatures in °C,
//! pressures in kPa, radiation in MJ·m⁻²·day⁻¹, wind in m·s⁻¹ and ET as a
//! water depth in mm·day⁻¹.

use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Latent heat of vaporization, MJ·kg⁻¹.
pub const LAMBDA_MJ_PER_KG: f64 = 2.45;

/// Seconds per day divided by 10⁶: converts W·m⁻² to MJ·m⁻²·day⁻¹.
const W_TO_MJ_PER_DAY: f64 = 0.0864;

/// Multiply a latent heat flux in W·m⁻² by this to get mm·day⁻¹ (≈ 0.035265).
pub const W_M2_TO_MM_DAY: f64 = W_TO_MJ_PER_DAY / LAMBDA_MJ_PER_KG;

/// Solar constant, MJ·m⁻²·min⁻¹.
const SOLAR_CONSTANT: f64 = 0.0820;

/// Stefan-Boltzmann constant, MJ·K⁻⁴·m⁻²·day⁻¹.
const STEFAN_BOLTZMANN: f64 = 4.903e-9;

/// Default Hargreaves-Samani empirical coefficient.
pub const DEFAULT_KT: f64 = 0.162;

/// Latitudes at or beyond this magnitude hit polar day/night.
pub const MAX_ABS_LATITUDE: f64 = 66.5;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum PhysicsError {
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("unsupported latitude {0}° (polar day/night is not modelled)")]
    UnsupportedLatitude(f64),
}

pub type Result<T> = core::result::Result<T, PhysicsError>;

fn finite(x: f64, what: &'static str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(PhysicsError::InvalidInput(what))
    }
}

/// One day of ERA5-Land style meteorology.
///
/// `t2m >= d2m` is deliberately not enforced; reanalysis occasionally
/// reports supersaturation and downstream code clamps instead of rejecting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeteoDay {
    /// Air temperature at 2 m, °C.
    pub t2m: f64,
    /// Dewpoint at 2 m, °C.
    pub d2m: f64,
    /// Eastward wind at 10 m, m·s⁻¹.
    pub u10: f64,
    /// Northward wind at 10 m, m·s⁻¹.
    pub v10: f64,
    /// Surface pressure, kPa.
    pub sp: f64,
    /// Surface net solar radiation, MJ·m⁻²·day⁻¹.
    pub ssr: f64,
    /// Total evaporation, mm·day⁻¹.
    pub evap: f64,
    /// Total precipitation, mm·day⁻¹.
    pub tp: f64,
}

impl MeteoDay {
    pub fn validate(&self) -> Result<()> {
        for (v, name) in [
            (self.t2m, "t2m must be finite"),
            (self.d2m, "d2m must be finite"),
            (self.u10, "u10 must be finite"),
            (self.v10, "v10 must be finite"),
            (self.evap, "evap must be finite"),
        ] {
            finite(v, name)?;
        }
        if !(self.sp > 0.0) || !self.sp.is_finite() {
            return Err(PhysicsError::InvalidInput("surface pressure must be positive"));
        }
        if !(self.ssr >= 0.0) || !self.ssr.is_finite() {
            return Err(PhysicsError::InvalidInput("net solar radiation must be non-negative"));
        }
        if !(self.tp >= 0.0) || !self.tp.is_finite() {
            return Err(PhysicsError::InvalidInput("precipitation must be non-negative"));
        }
        Ok(())
    }

    /// True when the dewpoint exceeds air temperature.
    pub fn is_supersaturated(&self) -> bool {
        self.d2m > self.t2m
    }
}

/// Inputs of the daily Penman-Monteith equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmInputs {
    /// Net radiation, MJ·m⁻²·day⁻¹.
    pub net_radiation: f64,
    /// Soil heat flux, MJ·m⁻²·day⁻¹.
    pub soil_heat_flux: f64,
    /// Air temperature, °C.
    pub temperature: f64,
    /// Wind speed at 2 m, m·s⁻¹.
    pub wind_2m: f64,
    /// Saturation vapour pressure, kPa.
    pub es: f64,
    /// Actual vapour pressure, kPa.
    pub ea: f64,
    /// Slope of the vapour pressure curve, kPa·°C⁻¹.
    pub delta: f64,
    /// Psychrometric constant, kPa·°C⁻¹.
    pub gamma: f64,
}

impl PmInputs {
    pub fn validate(&self) -> Result<()> {
        for (v, name) in [
            (self.net_radiation, "net radiation must be finite"),
            (self.soil_heat_flux, "soil heat flux must be finite"),
            (self.temperature, "temperature must be finite"),
            (self.wind_2m, "wind speed must be finite"),
            (self.es, "es must be finite"),
            (self.ea, "ea must be finite"),
            (self.delta, "delta must be finite"),
            (self.gamma, "gamma must be finite"),
        ] {
            finite(v, name)?;
        }
        if self.wind_2m < 0.0 {
            return Err(PhysicsError::InvalidInput("wind speed must be non-negative"));
        }
        if !(self.es >= self.ea && self.ea >= 0.0) {
            return Err(PhysicsError::InvalidInput("vapour pressures must satisfy es >= ea >= 0"));
        }
        if self.delta <= 0.0 {
            return Err(PhysicsError::InvalidInput("vapour curve slope must be positive"));
        }
        if self.gamma <= 0.0 {
            return Err(PhysicsError::InvalidInput("psychrometric constant must be positive"));
        }
        Ok(())
    }
}

/// Site location and day of year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoTime {
    /// Latitude, decimal degrees.
    pub lat: f64,
    /// Longitude, decimal degrees.
    pub lon: f64,
    /// Day of year, 1..=366. 366 is only meaningful in leap years; callers
    /// are responsible for that check.
    pub doy: u16,
}

/// Saturation vapour pressure (Tetens), kPa.
pub fn saturation_vapor_pressure(t: f64) -> Result<f64> {
    finite(t, "temperature must be finite")?;
    if t <= -100.0 {
        return Err(PhysicsError::InvalidInput("temperature must exceed -100 °C"));
    }
    Ok(0.6108 * libm::exp(17.27 * t / (t + 237.3)))
}

/// Actual vapour pressure from dewpoint, kPa.
pub fn actual_vapor_pressure(t_dew: f64) -> Result<f64> {
    saturation_vapor_pressure(t_dew)
}

/// Slope of the saturation vapour pressure curve, kPa·°C⁻¹.
pub fn vapor_curve_slope(t: f64) -> Result<f64> {
    let es = saturation_vapor_pressure(t)?;
    let d = t + 237.3;
    Ok(4098.0 * es / (d * d))
}

/// Psychrometric constant from surface pressure, kPa·°C⁻¹.
pub fn psychrometric_constant(sp: f64) -> Result<f64> {
    finite(sp, "pressure must be finite")?;
    if sp <= 0.0 {
        return Err(PhysicsError::InvalidInput("pressure must be positive"));
    }
    Ok(0.000665 * sp)
}

/// Log-profile reduction of the 10 m wind vector magnitude to 2 m.
pub fn wind_speed_2m(u10: f64, v10: f64) -> Result<f64> {
    finite(u10, "u10 must be finite")?;
    finite(v10, "v10 must be finite")?;
    let u = libm::hypot(u10, v10);
    Ok(u * 4.87 / libm::log(67.8 * 10.0 - 5.42))
}

/// Inverse relative Earth-Sun distance.
pub fn inverse_relative_distance(doy: u16) -> f64 {
    1.0 + 0.033 * libm::cos(2.0 * PI * f64::from(doy) / 365.0)
}

/// Solar declination, radians.
pub fn solar_declination(doy: u16) -> f64 {
    0.409 * libm::sin(2.0 * PI * f64::from(doy) / 365.0 - 1.39)
}

/// Extraterrestrial radiation for an explicit solar geometry.
///
/// Split out from [`extraterrestrial_radiation`] so callers can evaluate
/// the exact equinox (zero declination), which no integer day hits.
pub fn extraterrestrial_radiation_from_geometry(
    lat_deg: f64,
    declination: f64,
    inverse_distance: f64,
) -> Result<f64> {
    finite(lat_deg, "latitude must be finite")?;
    if lat_deg.abs() >= MAX_ABS_LATITUDE {
        return Err(PhysicsError::UnsupportedLatitude(lat_deg));
    }
    let phi = lat_deg.to_radians();
    let cos_ws = (-libm::tan(phi) * libm::tan(declination)).clamp(-1.0, 1.0);
    let ws = libm::acos(cos_ws);
    let term = ws * libm::sin(phi) * libm::sin(declination)
        + libm::cos(phi) * libm::cos(declination) * libm::sin(ws);
    Ok(24.0 * 60.0 / PI * SOLAR_CONSTANT * inverse_distance * term)
}

/// Daily extraterrestrial radiation Ra, MJ·m⁻²·day⁻¹.
pub fn extraterrestrial_radiation(geo: GeoTime) -> Result<f64> {
    if !(1..=366).contains(&geo.doy) {
        return Err(PhysicsError::InvalidInput("day of year must be in 1..=366"));
    }
    extraterrestrial_radiation_from_geometry(
        geo.lat,
        solar_declination(geo.doy),
        inverse_relative_distance(geo.doy),
    )
}

/// Net longwave radiation (outgoing positive), MJ·m⁻²·day⁻¹.
pub fn net_longwave(ssr: f64, t: f64, ea: f64, ra: f64) -> Result<f64> {
    finite(ssr, "ssr must be finite")?;
    finite(t, "temperature must be finite")?;
    finite(ea, "ea must be finite")?;
    finite(ra, "Ra must be finite")?;
    if ssr < 0.0 {
        return Err(PhysicsError::InvalidInput("ssr must be non-negative"));
    }
    if ra <= 0.0 {
        return Err(PhysicsError::InvalidInput("Ra must be positive"));
    }
    if ea < 0.0 {
        return Err(PhysicsError::InvalidInput("ea must be non-negative"));
    }
    let tk = t + 273.16;
    let tk2 = tk * tk;
    // relative shortwave held in [0.3, 1] so the cloudiness factor stays positive
    let cloudiness = 1.35 * (ssr / (0.75 * ra)).clamp(0.3, 1.0) - 0.35;
    Ok(STEFAN_BOLTZMANN * tk2 * tk2 * (0.34 - 0.14 * libm::sqrt(ea)) * cloudiness)
}

/// Net all-wave radiation: ERA5 net shortwave minus estimated net longwave.
/// Can be negative.
pub fn net_radiation(ssr: f64, t: f64, ea: f64, ra: f64) -> Result<f64> {
    Ok(ssr - net_longwave(ssr, t, ea, ra)?)
}

/// Daily FAO-56 Penman-Monteith reference ET, mm·day⁻¹.
///
/// The raw value is returned; it can be negative when net radiation is.
pub fn penman_monteith(p: &PmInputs) -> Result<f64> {
    p.validate()?;
    let radiative = 0.408 * p.delta * (p.net_radiation - p.soil_heat_flux);
    let aerodynamic =
        p.gamma * (900.0 / (p.temperature + 273.0)) * p.wind_2m * (p.es - p.ea);
    let denom = p.delta + p.gamma * (1.0 + 0.34 * p.wind_2m);
    Ok((radiative + aerodynamic) / denom)
}

/// Penman-Monteith reference ET for one day of meteorology at a location.
///
/// Closures: G = 0, ea is capped at es on supersaturated days, Rn from
/// [`net_radiation`]. Returns the raw (unclamped) value.
pub fn daily_reference_et(day: &MeteoDay, geo: GeoTime) -> Result<f64> {
    day.validate()?;
    let es = saturation_vapor_pressure(day.t2m)?;
    let ea = actual_vapor_pressure(day.d2m)?.min(es);
    let ra = extraterrestrial_radiation(geo)?;
    let inputs = PmInputs {
        net_radiation: net_radiation(day.ssr, day.t2m, ea, ra)?,
        soil_heat_flux: 0.0,
        temperature: day.t2m,
        wind_2m: wind_speed_2m(day.u10, day.v10)?,
        es,
        ea,
        delta: vapor_curve_slope(day.t2m)?,
        gamma: psychrometric_constant(day.sp)?,
    };
    penman_monteith(&inputs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HargreavesSamani {
    /// mm per dekad.
    pub et: f64,
    /// Set when Tavg ≤ −17.8 °C and the result was forced to zero.
    pub degenerate: bool,
}

/// Hargreaves-Samani dekadal ET, mm·dekad⁻¹.
///
/// `ra_dekad` is extraterrestrial radiation summed over the dekad and
/// `days` the dekad length (8..=11). The dekad length enters as a plain
/// multiplicative factor alongside the 0.408 energy-to-depth conversion.
pub fn hargreaves_samani(
    t_avg: f64,
    t_max: f64,
    t_min: f64,
    ra_dekad: f64,
    kt: f64,
    days: u8,
) -> Result<HargreavesSamani> {
    for (v, name) in [
        (t_avg, "Tavg must be finite"),
        (t_max, "Tmax must be finite"),
        (t_min, "Tmin must be finite"),
        (ra_dekad, "Ra must be finite"),
        (kt, "KT must be finite"),
    ] {
        finite(v, name)?;
    }
    if t_max < t_min {
        return Err(PhysicsError::InvalidInput("Tmax must not be below Tmin"));
    }
    if !(8..=11).contains(&days) {
        return Err(PhysicsError::InvalidInput("dekad length must be 8..=11 days"));
    }
    if kt <= 0.0 {
        return Err(PhysicsError::InvalidInput("KT must be positive"));
    }
    if t_avg <= -17.8 {
        return Ok(HargreavesSamani { et: 0.0, degenerate: true });
    }
    let et = 0.135
        * kt
        * (t_avg + 17.8)
        * libm::sqrt(t_max - t_min)
        * ra_dekad
        * 0.408
        * f64::from(days);
    Ok(HargreavesSamani { et, degenerate: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// W·m⁻² → mm·day⁻¹.
    Forward,
    /// mm·day⁻¹ → W·m⁻².
    Inverse,
}

/// Latent heat flux ⇄ evaporated water depth with a fixed λ.
pub fn le_to_et_depth(value: f64, direction: Direction) -> Result<f64> {
    finite(value, "flux must be finite")?;
    Ok(match direction {
        Direction::Forward => value * W_TO_MJ_PER_DAY / LAMBDA_MJ_PER_KG,
        Direction::Inverse => value * LAMBDA_MJ_PER_KG / W_TO_MJ_PER_DAY,
    })
}

/// mm·day⁻¹ → W·m⁻².
pub fn et_depth_to_le(mm_day: f64) -> Result<f64> {
    le_to_et_depth(mm_day, Direction::Inverse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn saturation_vapor_pressure_values() {
        assert_eq!(saturation_vapor_pressure(0.0).unwrap(), 0.6108);
        assert_relative_eq!(saturation_vapor_pressure(20.0).unwrap(), 2.338_281_270_9, epsilon = 1e-9);
        assert_relative_eq!(saturation_vapor_pressure(-5.0).unwrap(), 0.421_176_492_0, epsilon = 1e-9);
        assert!(saturation_vapor_pressure(f64::NAN).is_err());
        assert!(saturation_vapor_pressure(f64::INFINITY).is_err());
        assert!(saturation_vapor_pressure(-150.0).is_err());
    }

    #[test]
    fn actual_vapor_pressure_values() {
        assert_eq!(actual_vapor_pressure(0.0).unwrap(), 0.6108);
        assert_relative_eq!(actual_vapor_pressure(15.0).unwrap(), 1.705_346_232_2, epsilon = 1e-9);
        let t = 23.4;
        assert_eq!(actual_vapor_pressure(t).unwrap(), saturation_vapor_pressure(t).unwrap());
        assert!(actual_vapor_pressure(f64::NAN).is_err());
    }

    #[test]
    fn slope_values() {
        assert_relative_eq!(vapor_curve_slope(20.0).unwrap(), 0.144_740_188_1, epsilon = 1e-9);
        assert_relative_eq!(vapor_curve_slope(16.9).unwrap(), 0.122_112_658_4, epsilon = 1e-9);
        assert!(vapor_curve_slope(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn psychrometric_values() {
        assert_relative_eq!(psychrometric_constant(101.3).unwrap(), 0.067_364_5, epsilon = 1e-12);
        assert_relative_eq!(psychrometric_constant(81.8).unwrap(), 0.054_397, epsilon = 1e-12);
        assert!(psychrometric_constant(0.0).is_err());
        assert!(psychrometric_constant(-1.0).is_err());
    }

    #[test]
    fn wind_reduction() {
        assert_eq!(wind_speed_2m(0.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(wind_speed_2m(3.0, 4.0).unwrap(), 3.739_755_375_8, epsilon = 1e-9);
        assert_eq!(wind_speed_2m(-3.0, 4.0).unwrap(), wind_speed_2m(3.0, 4.0).unwrap());
        assert!(wind_speed_2m(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn extraterrestrial_radiation_values() {
        let ra = |lat, doy| extraterrestrial_radiation(GeoTime { lat, lon: 0.0, doy }).unwrap();
        assert_relative_eq!(ra(0.0, 80), 37.824_213_107_6, epsilon = 1e-8);
        assert!(ra(45.0, 172) > ra(45.0, 355));
        assert_relative_eq!(ra(44.7, 196), 40.617_114_606_2, epsilon = 1e-8);
        assert!(matches!(
            extraterrestrial_radiation(GeoTime { lat: 70.0, lon: 0.0, doy: 10 }),
            Err(PhysicsError::UnsupportedLatitude(_))
        ));
        assert!(extraterrestrial_radiation(GeoTime { lat: 10.0, lon: 0.0, doy: 0 }).is_err());
    }

    /// Integrates the cosine of the solar zenith angle over the day with a
    /// midpoint rule, independently of the sunset-hour-angle closed form.
    fn ra_by_quadrature(lat: f64, doy: u16) -> f64 {
        let phi = lat.to_radians();
        let dr = 1.0 + 0.033 * (2.0 * PI * f64::from(doy) / 365.0).cos();
        let decl = 0.409 * (2.0 * PI * f64::from(doy) / 365.0 - 1.39).sin();
        let n = 200_000;
        let step = 2.0 * PI / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            let w = -PI + (i as f64 + 0.5) * step;
            let c = phi.sin() * decl.sin() + phi.cos() * decl.cos() * w.cos();
            if c > 0.0 {
                s += c;
            }
        }
        24.0 * 60.0 / (2.0 * PI) * SOLAR_CONSTANT * dr * s * step
    }

    #[test]
    fn extraterrestrial_radiation_matches_quadrature() {
        for (lat, doy) in [(44.7, 196), (36.0, 15), (-30.0, 300), (60.0, 172)] {
            let closed = extraterrestrial_radiation(GeoTime { lat, lon: 0.0, doy }).unwrap();
            assert_relative_eq!(closed, ra_by_quadrature(lat, doy), max_relative = 1e-6);
        }
    }

    #[test]
    fn net_radiation_values() {
        // Hand evaluation of the longwave terms: Rnl = 3.149834657
        assert_relative_eq!(net_radiation(18.0, 20.0, 1.409, 38.1).unwrap(), 14.850_165_342_6, epsilon = 1e-8);
        let rn0 = net_radiation(0.0, 10.0, 1.0, 30.0).unwrap();
        assert!(rn0 <= 0.0);
        assert_eq!(rn0, -net_longwave(0.0, 10.0, 1.0, 30.0).unwrap());
        assert!(net_radiation(10.0, 15.0, 1.5, 30.0).unwrap() > net_radiation(10.0, 15.0, 1.0, 30.0).unwrap());
        assert!(net_radiation(10.0, 15.0, 1.0, 0.0).is_err());
    }

    fn example_inputs() -> PmInputs {
        PmInputs {
            net_radiation: 13.28,
            soil_heat_flux: 0.0,
            temperature: 16.9,
            wind_2m: 2.078,
            es: 1.997,
            ea: 1.409,
            delta: 0.122,
            gamma: 0.0666,
        }
    }

    #[test]
    fn penman_monteith_values() {
        assert_relative_eq!(penman_monteith(&example_inputs()).unwrap(), 3.877_117_063_3, epsilon = 1e-9);

        let mut p = example_inputs();
        p.wind_2m = 0.0;
        p.ea = p.es;
        let expected = 0.408 * p.delta * p.net_radiation / (p.delta + p.gamma);
        assert_eq!(penman_monteith(&p).unwrap(), expected);

        p.soil_heat_flux = p.net_radiation;
        assert_eq!(penman_monteith(&p).unwrap(), 0.0);
    }

    #[test]
    fn penman_monteith_rejects_bad_inputs() {
        let mut p = example_inputs();
        p.ea = 2.5;
        assert!(penman_monteith(&p).is_err());
        let mut p = example_inputs();
        p.wind_2m = -1.0;
        assert!(penman_monteith(&p).is_err());
        let mut p = example_inputs();
        p.gamma = 0.0;
        assert!(penman_monteith(&p).is_err());
        let mut p = example_inputs();
        p.delta = f64::NAN;
        assert!(penman_monteith(&p).is_err());
    }

    #[test]
    fn hargreaves_samani_values() {
        let hs = hargreaves_samani(20.0, 28.0, 12.0, 30.0, DEFAULT_KT, 10).unwrap();
        assert_relative_eq!(hs.et, 404.745_465_6, epsilon = 1e-7);
        assert!(!hs.degenerate);
        assert_eq!(hargreaves_samani(20.0, 25.0, 25.0, 30.0, DEFAULT_KT, 10).unwrap().et, 0.0);
        let cold = hargreaves_samani(-17.8, 0.0, -30.0, 30.0, DEFAULT_KT, 10).unwrap();
        assert_eq!(cold.et, 0.0);
        assert!(cold.degenerate);
        assert!(hargreaves_samani(20.0, 10.0, 12.0, 30.0, DEFAULT_KT, 10).is_err());
        assert!(hargreaves_samani(20.0, 28.0, 12.0, 30.0, DEFAULT_KT, 7).is_err());
        assert!(hargreaves_samani(20.0, 28.0, 12.0, 30.0, 0.0, 10).is_err());
    }

    #[test]
    fn le_conversion() {
        assert_eq!(le_to_et_depth(0.0, Direction::Forward).unwrap(), 0.0);
        assert_relative_eq!(le_to_et_depth(22.07, Direction::Forward).unwrap(), 0.778_305_306_1, epsilon = 1e-9);
        assert!(le_to_et_depth(f64::NAN, Direction::Forward).is_err());
    }

    #[test]
    fn supersaturated_day_still_yields_et() {
        let day = MeteoDay { t2m: 10.0, d2m: 11.0, u10: 1.0, v10: 0.0, sp: 100.0, ssr: 8.0, evap: 1.0, tp: 0.0 };
        assert!(day.is_supersaturated());
        let et = daily_reference_et(&day, GeoTime { lat: 44.0, lon: -93.0, doy: 120 }).unwrap();
        assert!(et.is_finite());
    }

    proptest! {
        #[test]
        fn pm_increasing_in_net_radiation(
            rn in -5.0f64..30.0, t in -10.0f64..40.0, u2 in 0.0f64..10.0,
            rh in 0.05f64..1.0, sp in 70.0f64..105.0,
        ) {
            let es = saturation_vapor_pressure(t).unwrap();
            let p = PmInputs {
                net_radiation: rn, soil_heat_flux: 0.0, temperature: t, wind_2m: u2,
                es, ea: es * rh, delta: vapor_curve_slope(t).unwrap(),
                gamma: psychrometric_constant(sp).unwrap(),
            };
            let lo = penman_monteith(&p).unwrap();
            let hi = penman_monteith(&PmInputs { net_radiation: rn + 1e-3, ..p }).unwrap();
            prop_assert!(hi > lo);
        }

        #[test]
        fn pm_nonnegative_when_forcing_nonnegative(
            g in -2.0f64..2.0, extra in 0.0f64..30.0, t in -10.0f64..40.0,
            u2 in 0.0f64..10.0, rh in 0.0f64..=1.0,
        ) {
            let es = saturation_vapor_pressure(t).unwrap();
            let p = PmInputs {
                net_radiation: g + extra, soil_heat_flux: g, temperature: t, wind_2m: u2,
                es, ea: es * rh, delta: vapor_curve_slope(t).unwrap(), gamma: 0.066,
            };
            prop_assert!(penman_monteith(&p).unwrap() >= 0.0);
        }

        #[test]
        fn es_increasing_and_slope_is_derivative(t in -40.0f64..50.0) {
            let h = 1e-4;
            let lo = saturation_vapor_pressure(t - h).unwrap();
            let hi = saturation_vapor_pressure(t + h).unwrap();
            prop_assert!(hi > lo);
            let numeric = (hi - lo) / (2.0 * h);
            prop_assert!((numeric - vapor_curve_slope(t).unwrap()).abs() < 1e-4);
            prop_assert!(vapor_curve_slope(t).unwrap() > 0.0);
        }

        #[test]
        fn ra_symmetric_at_equinox(lat in 0.0f64..66.0) {
            let north = extraterrestrial_radiation_from_geometry(lat, 0.0, 1.0).unwrap();
            let south = extraterrestrial_radiation_from_geometry(-lat, 0.0, 1.0).unwrap();
            prop_assert!((north - south).abs() < 1e-6);
            prop_assert!(north > 0.0);
        }

        #[test]
        fn hs_linear_in_kt_and_ra(kt in 0.01f64..1.0, ra in 1.0f64..500.0, k in 0.1f64..10.0) {
            let base = hargreaves_samani(15.0, 25.0, 5.0, ra, kt, 10).unwrap().et;
            let kt_scaled = hargreaves_samani(15.0, 25.0, 5.0, ra, kt * k, 10).unwrap().et;
            let ra_scaled = hargreaves_samani(15.0, 25.0, 5.0, ra * k, kt, 10).unwrap().et;
            prop_assert!((kt_scaled - k * base).abs() <= 1e-12 * kt_scaled.abs().max(1.0));
            prop_assert!((ra_scaled - k * base).abs() <= 1e-12 * ra_scaled.abs().max(1.0));
        }

        #[test]
        fn le_round_trip(x in -1e4f64..1e4) {
            let mm = le_to_et_depth(x, Direction::Forward).unwrap();
            let back = le_to_et_depth(mm, Direction::Inverse).unwrap();
            prop_assert!((back - x).abs() <= 1e-12 * x.abs());
        }
    }
}
