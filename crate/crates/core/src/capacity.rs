//! Storage-density, data-rate and transport arithmetic for a parking-spot chip.

use crate::error::{Error, Result};

const UM_PER_CM: f64 = 1e4;

/// Areas in cm², thickness in μm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChipLayout {
    pub n_parking_spots: f64,
    pub spot_area_total: f64,
    pub n_stations: f64,
    pub station_area_total: f64,
    pub plumbing_area: f64,
    pub chip_area: f64,
    pub bytes_per_block: f64,
    pub layer_thickness_um: f64,
}

impl Default for ChipLayout {
    fn default() -> Self {
        ChipLayout {
            n_parking_spots: 1e6,
            spot_area_total: 0.25,
            n_stations: 1000.0,
            station_area_total: 0.1,
            plumbing_area: 0.65,
            chip_area: 1.0,
            bytes_per_block: 1e6,
            layer_thickness_um: 10.0,
        }
    }
}

impl ChipLayout {
    pub fn used_area(&self) -> f64 {
        self.spot_area_total + self.station_area_total + self.plumbing_area
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("n_parking_spots", self.n_parking_spots),
            ("spot_area_total", self.spot_area_total),
            ("n_stations", self.n_stations),
            ("station_area_total", self.station_area_total),
            ("plumbing_area", self.plumbing_area),
            ("chip_area", self.chip_area),
            ("bytes_per_block", self.bytes_per_block),
            ("layer_thickness_um", self.layer_thickness_um),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config(format!(
                "layout {name} must be positive, got {v}"
            )));
        }
        // Tolerate decimal round-off in the area sum.
        if self.used_area() > self.chip_area * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "spots, stations and plumbing need {} cm² but the chip has {} cm²",
                self.used_area(),
                self.chip_area
            )));
        }
        Ok(())
    }
}

/// Bytes per cm² of chip.
pub fn areal_capacity(layout: &ChipLayout) -> Result<f64> {
    layout.validate()?;
    Ok(layout.n_parking_spots * layout.bytes_per_block / layout.chip_area)
}

/// Bytes per cm³ for a stack of chip layers.
pub fn volumetric_capacity(layout: &ChipLayout) -> Result<f64> {
    Ok(areal_capacity(layout)? * (UM_PER_CM / layout.layer_thickness_um))
}

/// Bits per second when a molecule carrying `bits_per_molecule` takes `dwell_s`.
pub fn read_rate(bits_per_molecule: f64, dwell_s: f64) -> Result<f64> {
    if !(dwell_s > 0.0) {
        return Err(Error::Domain(format!(
            "dwell must be positive, got {dwell_s}"
        )));
    }
    Ok(bits_per_molecule / dwell_s)
}

/// Bits per second for base-by-base readout.
pub fn per_base_rate(bases_per_s: f64, bits_per_base: f64) -> f64 {
    bases_per_s * bits_per_base
}

pub fn aggregate_rate(rate: f64, n_stations: u64) -> Result<f64> {
    if n_stations == 0 {
        return Err(Error::Domain("at least one read station is needed".into()));
    }
    Ok(rate * n_stations as f64)
}

/// Electrophoretic crossing time in a uniform field: `L² / (μ V)`.
pub fn transport_time(distance_m: f64, voltage_v: f64, mobility: f64) -> Result<f64> {
    if !(distance_m > 0.0 && voltage_v > 0.0 && mobility > 0.0) {
        return Err(Error::Domain(
            "distance, voltage and mobility must be positive".into(),
        ));
    }
    Ok(distance_m * distance_m / (mobility * voltage_v))
}

/// Height of a disc stack holding `total_bytes`.
pub fn dvd_stack_height(
    total_bytes: f64,
    bytes_per_disc: f64,
    disc_thickness_m: f64,
) -> Result<f64> {
    if !(total_bytes > 0.0 && bytes_per_disc > 0.0 && disc_thickness_m > 0.0) {
        return Err(Error::Domain("stack inputs must be positive".into()));
    }
    Ok((total_bytes / bytes_per_disc).ceil() * disc_thickness_m)
}

/// Inputs of the capacity report beyond the chip layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputInputs {
    pub bits_per_molecule: f64,
    pub molecule_dwell_s: f64,
    pub bases_per_s: f64,
    pub bits_per_base: f64,
    pub transport_distance_m: f64,
    pub transport_voltage_v: f64,
    /// Effective electrophoretic mobility, m²/(V·s).
    pub mobility: f64,
    pub dvd_total_bytes: f64,
    pub dvd_bytes_per_disc: f64,
    pub dvd_thickness_m: f64,
}

impl Default for ThroughputInputs {
    fn default() -> Self {
        ThroughputInputs {
            bits_per_molecule: 2.0,
            molecule_dwell_s: 150e-6,
            bases_per_s: 1e6,
            bits_per_base: 1.0,
            transport_distance_m: 0.01,
            transport_voltage_v: 10.0,
            mobility: 1e-2,
            dvd_total_bytes: 1e15,
            dvd_bytes_per_disc: 9.4e9,
            dvd_thickness_m: 1.2e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityReport {
    pub areal_bytes_per_cm2: f64,
    pub volumetric_bytes_per_cm3: f64,
    pub used_area_cm2: f64,
    pub molecule_read_bps: f64,
    pub molecule_aggregate_bps: f64,
    pub per_base_bps: f64,
    pub per_base_aggregate_bps: f64,
    pub transport_time_s: f64,
    pub dvd_stack_m: f64,
}

pub fn capacity_report(layout: &ChipLayout, t: &ThroughputInputs) -> Result<CapacityReport> {
    let stations = layout.n_stations.round() as u64;
    let molecule_read_bps = read_rate(t.bits_per_molecule, t.molecule_dwell_s)?;
    let per_base_bps = per_base_rate(t.bases_per_s, t.bits_per_base);
    Ok(CapacityReport {
        areal_bytes_per_cm2: areal_capacity(layout)?,
        volumetric_bytes_per_cm3: volumetric_capacity(layout)?,
        used_area_cm2: layout.used_area(),
        molecule_read_bps,
        molecule_aggregate_bps: aggregate_rate(molecule_read_bps, stations)?,
        per_base_bps,
        per_base_aggregate_bps: aggregate_rate(per_base_bps, stations)?,
        transport_time_s: transport_time(
            t.transport_distance_m,
            t.transport_voltage_v,
            t.mobility,
        )?,
        dvd_stack_m: dvd_stack_height(t.dvd_total_bytes, t.dvd_bytes_per_disc, t.dvd_thickness_m)?,
    })
}

impl CapacityReport {
    fn rows(&self) -> [(&'static str, f64, &'static str); 9] {
        [
            ("areal_capacity", self.areal_bytes_per_cm2, "bytes/cm2"),
            (
                "volumetric_capacity",
                self.volumetric_bytes_per_cm3,
                "bytes/cm3",
            ),
            ("used_area", self.used_area_cm2, "cm2"),
            ("molecule_read_rate", self.molecule_read_bps, "bit/s"),
            (
                "molecule_aggregate_rate",
                self.molecule_aggregate_bps,
                "bit/s",
            ),
            ("per_base_read_rate", self.per_base_bps, "bit/s"),
            (
                "per_base_aggregate_rate",
                self.per_base_aggregate_bps,
                "bit/s",
            ),
            ("transport_time", self.transport_time_s, "s"),
            ("dvd_stack_height", self.dvd_stack_m, "m"),
        ]
    }

    pub fn to_text(&self) -> String {
        self.rows()
            .iter()
            .map(|(k, v, u)| format!("{k:<26}{v:>14.6e} {u}\n"))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("quantity,value,unit\n");
        for (k, v, u) in self.rows() {
            out.push_str(&format!("{k},{v:e},{u}\n"));
        }
        out
    }
}
