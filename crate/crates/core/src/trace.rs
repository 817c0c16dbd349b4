//! Parametric workload traces: generation, the legacy arrival-only workloads,
//! and the CSV schema shared by both.
//!
//! A trace is a list of per-step VM snapshots. Each row says "VM `v` of
//! service `b` exists at step `t` with these resources and utilizations".
//! A VM lives on the steps `t_init <= t < t_end`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Resources;

/// Sampling distribution over integers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pdf", rename_all = "lowercase")]
pub enum Pdf {
    /// Integer uniform on `a..=b`.
    Uniform { a: i64, b: i64 },
    Poisson { lambda: f64 },
}

impl Pdf {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Pdf::Uniform { a, b } if a > b => {
                Err(Error::config(format!("uniform pdf needs a <= b, got ({a}, {b})")))
            }
            Pdf::Poisson { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
                Err(Error::config("poisson pdf needs lambda > 0"))
            }
            _ => Ok(()),
        }
    }
}

/// One draw from `pdf`. Poisson variates come from `rand_distr`.
pub fn sample(pdf: &Pdf, rng: &mut impl Rng) -> i64 {
    match *pdf {
        Pdf::Uniform { a, b } => rng.random_range(a..=b),
        Pdf::Poisson { lambda } => Poisson::new(lambda)
            .expect("validated lambda")
            .sample(rng) as i64,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceType {
    pub name: String,
    pub cpu: f64,
    pub ram: f64,
    pub net: f64,
}

impl InstanceType {
    fn new(name: &str, cpu: f64, ram: f64, net: f64) -> Self {
        InstanceType {
            name: name.to_string(),
            cpu,
            ram,
            net,
        }
    }
}

/// Eleven public-cloud instance types, ascending by ECU.
pub fn default_instance_types() -> Vec<InstanceType> {
    vec![
        InstanceType::new("m3.medium", 3.0, 3.75, 300.0),
        InstanceType::new("m3.large", 6.5, 7.5, 450.0),
        InstanceType::new("c4.large", 8.0, 3.75, 500.0),
        InstanceType::new("m4.xlarge", 13.0, 16.0, 750.0),
        InstanceType::new("c4.xlarge", 16.0, 7.5, 750.0),
        InstanceType::new("m4.2xlarge", 26.0, 32.0, 1000.0),
        InstanceType::new("c4.2xlarge", 31.0, 15.0, 1000.0),
        InstanceType::new("m4.4xlarge", 53.5, 64.0, 2000.0),
        InstanceType::new("c4.4xlarge", 62.0, 30.0, 2000.0),
        InstanceType::new("m4.10xlarge", 124.5, 160.0, 10000.0),
        InstanceType::new("c4.8xlarge", 132.0, 60.0, 10000.0),
    ]
}

/// Revenue per unit of requested resource [USD].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub cpu: f64,
    pub ram: f64,
    pub net: f64,
}

impl Default for Rates {
    fn default() -> Self {
        Rates {
            cpu: 0.065,
            ram: 0.016,
            net: 0.179,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorParams {
    pub duration: u32,
    pub num_datacenters: u32,
    pub num_services: u32,
    pub max_vms_per_service: u32,
    pub instance_types: Vec<InstanceType>,
    pub horizontal_elasticity: Pdf,
    pub vertical_elasticity: Pdf,
    /// Percent utilization of CPU and RAM.
    pub server_util: Pdf,
    /// Percent utilization of network.
    pub network_util: Pdf,
    pub rates: Rates,
    pub rng_seed: u64,
}

impl Default for GeneratorParams {
    /// Reference elastic, overbooked workload with uniform distributions.
    fn default() -> Self {
        GeneratorParams {
            duration: 1000,
            num_datacenters: 1,
            num_services: 100,
            max_vms_per_service: 10,
            instance_types: default_instance_types(),
            horizontal_elasticity: Pdf::Uniform { a: 0, b: 10 },
            vertical_elasticity: Pdf::Uniform { a: 0, b: 10 },
            server_util: Pdf::Uniform { a: 0, b: 100 },
            network_util: Pdf::Uniform { a: 0, b: 100 },
            rates: Rates::default(),
            rng_seed: 0,
        }
    }
}

impl GeneratorParams {
    /// Ten steps, two services of five VMs, one instance type, full
    /// utilization: neither elasticity nor overbooking.
    pub fn steady_example() -> Self {
        GeneratorParams {
            duration: 10,
            num_services: 2,
            max_vms_per_service: 5,
            instance_types: vec![InstanceType::new("m3.large", 6.5, 7.5, 450.0)],
            horizontal_elasticity: Pdf::Uniform { a: 5, b: 5 },
            vertical_elasticity: Pdf::Uniform { a: 1, b: 1 },
            server_util: Pdf::Uniform { a: 100, b: 100 },
            network_util: Pdf::Uniform { a: 100, b: 100 },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_datacenters == 0 {
            return Err(Error::config("num_datacenters must be positive"));
        }
        if self.instance_types.is_empty() {
            return Err(Error::config("instance_types must not be empty"));
        }
        for it in &self.instance_types {
            if [it.cpu, it.ram, it.net].iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::config(format!("instance type {} needs positive resources", it.name)));
            }
        }
        if self.instance_types.windows(2).any(|w| w[0].cpu > w[1].cpu) {
            return Err(Error::config("instance_types must be ordered by cpu ascending"));
        }
        for pdf in [
            &self.horizontal_elasticity,
            &self.vertical_elasticity,
            &self.server_util,
            &self.network_util,
        ] {
            pdf.validate()?;
        }
        Ok(())
    }
}

/// One row of the trace CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub t: u32,
    /// Service.
    pub b: u32,
    /// Datacenter.
    pub c: u32,
    /// VM index, unique across the trace.
    pub v: u64,
    pub cpu: f64,
    pub ram: f64,
    pub net: f64,
    /// Percent utilizations in [0, 100].
    pub u_cpu: f64,
    pub u_ram: f64,
    pub u_net: f64,
    pub r_cpu: f64,
    pub r_ram: f64,
    pub r_net: f64,
    pub t_init: u32,
    /// Exclusive.
    pub t_end: u32,
    pub sla: Option<u32>,
}

impl TraceEvent {
    pub fn demand(&self) -> Resources {
        Resources::new(self.cpu, self.ram, self.net)
    }

    /// Utilization ratios in [0, 1].
    pub fn utilization(&self) -> Resources {
        Resources::new(self.u_cpu, self.u_ram, self.u_net).map(|u| u / 100.0)
    }

    pub fn rates(&self) -> Resources {
        Resources::new(self.r_cpu, self.r_ram, self.r_net)
    }

    /// Revenue implied by the per-resource rates.
    pub fn revenue(&self) -> f64 {
        crate::model::rate_revenue(&self.demand(), &self.rates())
    }
}

/// A generated VM; `t_end` is set once the VM is finished.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct GenVm {
    pub v: u64,
    pub t_init: u32,
    pub t_end: Option<u32>,
}

struct Service {
    start: u32,
    end: u32,
    datacenter: u32,
    vms: Vec<GenVm>,
}

/// Finishes random VMs or creates new ones until `vms` has `target` living
/// VMs at `t`. Returns the indices of the living VMs, ascending.
pub(crate) fn reconcile(
    vms: &mut Vec<GenVm>,
    target: usize,
    t: u32,
    next_v: &mut u64,
    rng: &mut impl Rng,
) -> Vec<usize> {
    let mut alive: Vec<usize> = (0..vms.len()).filter(|&k| vms[k].t_end.is_none()).collect();
    while alive.len() > target {
        let k = *alive.choose(rng).expect("non-empty");
        vms[k].t_end = Some(t);
        alive.retain(|&x| x != k);
    }
    while alive.len() < target {
        vms.push(GenVm {
            v: *next_v,
            t_init: t,
            t_end: None,
        });
        *next_v += 1;
        alive.push(vms.len() - 1);
    }
    alive
}

fn percent(pdf: &Pdf, rng: &mut impl Rng) -> f64 {
    sample(pdf, rng).clamp(0, 100) as f64
}

/// Generates a trace. Pure function of `params` (including its seed).
pub fn generate(params: &GeneratorParams) -> Result<Vec<TraceEvent>> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let t_max = params.duration;
    let mut services: Vec<Service> = Vec::new();
    if t_max > 0 {
        for _ in 0..params.num_services {
            let start = rng.random_range(0..t_max);
            let lifetime = rng.random_range(1..=t_max - start);
            services.push(Service {
                start,
                end: start + lifetime,
                datacenter: rng.random_range(0..params.num_datacenters),
                vms: Vec::new(),
            });
        }
    }

    let last_type = params.instance_types.len() as i64 - 1;
    let mut next_v = 0u64;
    let mut rows: Vec<TraceEvent> = Vec::new();
    for t in 0..t_max {
        for (b, service) in services.iter_mut().enumerate() {
            if t == service.end {
                for vm in service.vms.iter_mut().filter(|vm| vm.t_end.is_none()) {
                    vm.t_end = Some(t);
                }
            }
            if t < service.start || t >= service.end {
                continue;
            }
            let target = sample(&params.horizontal_elasticity, &mut rng)
                .clamp(0, params.max_vms_per_service as i64) as usize;
            let alive = reconcile(&mut service.vms, target, t, &mut next_v, &mut rng);
            for k in alive {
                let it = &params.instance_types
                    [sample(&params.vertical_elasticity, &mut rng).clamp(0, last_type) as usize];
                let u_cpu = percent(&params.server_util, &mut rng);
                let u_ram = percent(&params.server_util, &mut rng);
                let u_net = percent(&params.network_util, &mut rng);
                let vm = &service.vms[k];
                rows.push(TraceEvent {
                    t,
                    b: b as u32,
                    c: service.datacenter,
                    v: vm.v,
                    cpu: it.cpu,
                    ram: it.ram,
                    net: it.net,
                    u_cpu,
                    u_ram,
                    u_net,
                    r_cpu: params.rates.cpu,
                    r_ram: params.rates.ram,
                    r_net: params.rates.net,
                    t_init: vm.t_init,
                    t_end: 0,
                    sla: None,
                });
            }
        }
    }

    let mut ends: BTreeMap<u64, u32> = BTreeMap::new();
    for service in &services {
        for vm in &service.vms {
            ends.insert(vm.v, vm.t_end.unwrap_or(service.end.min(t_max)));
        }
    }
    for row in &mut rows {
        row.t_end = ends[&row.v];
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LegacyParams {
    pub duration: u32,
    /// Single-VM services to create.
    pub services: u32,
    /// Creation time distribution.
    pub arrivals: Pdf,
    /// VM lifetime in steps; `None` keeps every VM until the end of the trace.
    pub lifetime: Option<Pdf>,
    /// Highest SLA level drawn.
    pub max_sla: u32,
    pub rng_seed: u64,
}

impl Default for LegacyParams {
    fn default() -> Self {
        LegacyParams {
            duration: 100,
            services: 100,
            arrivals: Pdf::Poisson { lambda: 10.0 },
            lifetime: None,
            max_sla: 5,
            rng_seed: 0,
        }
    }
}

impl LegacyParams {
    /// The four reference arrival patterns: Poisson(10), Poisson(50),
    /// Poisson(70) and Uniform(0, 100).
    pub fn reference_workloads() -> [(&'static str, LegacyParams); 4] {
        let with = |arrivals| LegacyParams {
            arrivals,
            ..LegacyParams::default()
        };
        [
            ("W1", with(Pdf::Poisson { lambda: 10.0 })),
            ("W2", with(Pdf::Poisson { lambda: 50.0 })),
            ("W3", with(Pdf::Poisson { lambda: 70.0 })),
            ("W4", with(Pdf::Uniform { a: 0, b: 100 })),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_sla == 0 {
            return Err(Error::config("max_sla must be at least 1"));
        }
        self.arrivals.validate()?;
        if let Some(l) = &self.lifetime {
            l.validate()?;
        }
        Ok(())
    }
}

/// Arrival-only workload of single-VM services with fixed, fully used
/// resources and an SLA level per VM.
pub fn legacy_workload(params: &LegacyParams) -> Result<Vec<TraceEvent>> {
    params.validate()?;
    if params.duration == 0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let last = params.duration as i64 - 1;
    let mut rows = Vec::new();
    for v in 0..params.services as u64 {
        let t_init = sample(&params.arrivals, &mut rng).clamp(0, last) as u32;
        let cpu = rng.random_range(1..=8) as f64;
        let ram = rng.random_range(1..=8) as f64;
        let net = rng.random_range(10..=1000) as f64;
        let revenue = rng.random_range(0.1..=1.5);
        let sla = rng.random_range(1..=params.max_sla);
        let t_end = match &params.lifetime {
            Some(pdf) => {
                let life = sample(pdf, &mut rng).max(1) as u32;
                t_init.saturating_add(life).min(params.duration)
            }
            None => params.duration,
        };
        for t in t_init..t_end {
            rows.push(TraceEvent {
                t,
                b: v as u32,
                c: 0,
                v,
                cpu,
                ram,
                net,
                u_cpu: 100.0,
                u_ram: 100.0,
                u_net: 100.0,
                r_cpu: revenue / cpu,
                r_ram: 0.0,
                r_net: 0.0,
                t_init,
                t_end,
                sla: Some(sla),
            });
        }
    }
    rows.sort_by_key(|r| (r.t, r.v));
    Ok(rows)
}

/// Either generator, as selected by a config file's `generator` key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "lowercase")]
pub enum TraceSpec {
    Cwtg(GeneratorParams),
    Legacy(LegacyParams),
}

impl TraceSpec {
    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            TraceSpec::Cwtg(p) => p.rng_seed = seed,
            TraceSpec::Legacy(p) => p.rng_seed = seed,
        }
        self
    }

    pub fn generate(&self) -> Result<Vec<TraceEvent>> {
        match self {
            TraceSpec::Cwtg(p) => generate(p),
            TraceSpec::Legacy(p) => legacy_workload(p),
        }
    }
}

pub const HEADER: [&str; 15] = [
    "t", "b_j", "c_j", "v_j", "cpu", "ram", "net", "u_cpu", "u_ram", "u_net", "r_cpu", "r_ram",
    "r_net", "t_init", "t_end",
];

/// Writes the header and one row per event. An `sla` column is appended only
/// when some event carries an SLA level.
pub fn write_csv(events: &[TraceEvent], out: impl Write) -> Result<()> {
    let with_sla = events.iter().any(|e| e.sla.is_some());
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::config(format!("csv write failed: {e}"));
    let mut header: Vec<&str> = HEADER.to_vec();
    if with_sla {
        header.push("sla");
    }
    w.write_record(&header).map_err(csv_err)?;
    for e in events {
        let mut rec = vec![
            e.t.to_string(),
            e.b.to_string(),
            e.c.to_string(),
            e.v.to_string(),
            e.cpu.to_string(),
            e.ram.to_string(),
            e.net.to_string(),
            e.u_cpu.to_string(),
            e.u_ram.to_string(),
            e.u_net.to_string(),
            e.r_cpu.to_string(),
            e.r_ram.to_string(),
            e.r_net.to_string(),
            e.t_init.to_string(),
            e.t_end.to_string(),
        ];
        if with_sla {
            rec.push(e.sla.map(|s| s.to_string()).unwrap_or_default());
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::config(format!("csv write failed: {e}")))
}

pub fn to_csv_string(events: &[TraceEvent]) -> String {
    let mut buf = Vec::new();
    write_csv(events, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

/// Parses a trace. The header row is optional.
pub fn parse_csv(input: impl Read) -> Result<Vec<TraceEvent>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Schema {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(k as u64 + 1, |p| p.line());
        if k == 0 && rec.get(0) == Some("t") {
            continue;
        }
        out.push(parse_row(&rec, line)?);
    }
    Ok(out)
}

fn parse_row(rec: &csv::StringRecord, line: u64) -> Result<TraceEvent> {
    let schema = |message: String| Error::Schema { line, message };
    if rec.len() != 15 && rec.len() != 16 {
        return Err(schema(format!("expected 15 or 16 columns, found {}", rec.len())));
    }
    let f = |i: usize| -> Result<f64> {
        let s = &rec[i];
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| schema(format!("column {} ({}) is not a number: {s:?}", i + 1, col_name(i))))
    };
    let int = |i: usize| -> Result<u64> {
        let s = &rec[i];
        s.parse::<u64>()
            .map_err(|_| schema(format!("column {} ({}) is not a nonnegative integer: {s:?}", i + 1, col_name(i))))
    };
    let small = |i: usize| -> Result<u32> {
        u32::try_from(int(i)?).map_err(|_| schema(format!("column {} out of range", i + 1)))
    };
    let pct = |i: usize| -> Result<f64> {
        let v = f(i)?;
        if (0.0..=100.0).contains(&v) {
            Ok(v)
        } else {
            Err(schema(format!("{} = {v} outside [0, 100]", col_name(i))))
        }
    };
    let sla = match rec.get(15) {
        None | Some("") => None,
        Some(_) => Some(small(15)?),
    };
    let e = TraceEvent {
        t: small(0)?,
        b: small(1)?,
        c: small(2)?,
        v: int(3)?,
        cpu: f(4)?,
        ram: f(5)?,
        net: f(6)?,
        u_cpu: pct(7)?,
        u_ram: pct(8)?,
        u_net: pct(9)?,
        r_cpu: f(10)?,
        r_ram: f(11)?,
        r_net: f(12)?,
        t_init: small(13)?,
        t_end: small(14)?,
        sla,
    };
    if [e.cpu, e.ram, e.net, e.r_cpu, e.r_ram, e.r_net].iter().any(|v| *v < 0.0) {
        return Err(schema("resources and rates must be nonnegative".into()));
    }
    Ok(e)
}

fn col_name(i: usize) -> &'static str {
    HEADER.get(i).copied().unwrap_or("sla")
}
