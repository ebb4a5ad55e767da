use super::registry::{Block, IndexKind, Registry};
use super::{BuiltModel, ModelConfig, ModelError, StorageFormulation};
use crate::lp::{LpBuilder, RowSense};
use crate::system::{EmissionsPolicy, EnergySystem, Resource, ResourceKind};
use crate::tdr::RepresentativePeriodSet;

const INF: f64 = f64::INFINITY;

/// Column blocks of one storage resource.
struct StorageCols {
    dis: Block,
    chg: Block,
    soc: Block,
    virt: Option<(Block, Block, Block)>,
}

pub(super) struct Assembly<'a> {
    system: &'a EnergySystem,
    rps: &'a RepresentativePeriodSet,
    config: &'a ModelConfig,
    lp: LpBuilder,
    vars: Registry,
    cons: Registry,
    weights: Vec<f64>,
    tau: usize,
    n_t: usize,
    /// Source hour of each modeled timestep.
    source: Vec<usize>,
}

impl<'a> Assembly<'a> {
    pub(super) fn new(
        system: &'a EnergySystem,
        rps: &'a RepresentativePeriodSet,
        config: &'a ModelConfig,
    ) -> Self {
        let n_t = rps.modeled_hours();
        Assembly {
            system,
            rps,
            config,
            lp: LpBuilder::new(),
            vars: Registry::new(),
            cons: Registry::new(),
            weights: (0..n_t).map(|t| rps.timestep_weight(t)).collect(),
            tau: rps.period_length(),
            n_t,
            source: (0..n_t).map(|t| rps.source_hour(t)).collect(),
        }
    }

    fn scale(&self) -> f64 {
        self.config.objective_scale
    }

    fn is_forced(&self, r: &Resource) -> bool {
        self.config
            .forced_ldes
            .as_ref()
            .is_some_and(|f| f.resource == r.id)
    }

    fn linked(&self, r: &Resource) -> bool {
        self.config.ldes_linking && r.is_ldes()
    }

    fn first(&self, m: usize) -> usize {
        m * self.tau
    }

    fn last(&self, m: usize) -> usize {
        m * self.tau + self.tau - 1
    }

    fn var_block(
        &mut self,
        family: &str,
        entity: &str,
        kind: IndexKind,
        len: usize,
        mut col: impl FnMut(usize) -> (f64, f64, f64),
    ) -> Result<Block, ModelError> {
        let block = self.vars.push(family, entity, kind, len)?;
        for k in 0..len {
            let (cost, lo, hi) = col(k);
            self.lp.add_column(block.name(k), cost, lo, hi);
        }
        Ok(block)
    }

    fn row_block(
        &mut self,
        family: &str,
        entity: &str,
        kind: IndexKind,
        len: usize,
        mut row: impl FnMut(usize) -> (RowSense, f64, Vec<(usize, f64)>),
    ) -> Result<Block, ModelError> {
        let block = self.cons.push(family, entity, kind, len)?;
        for k in 0..len {
            let (sense, rhs, terms) = row(k);
            self.lp.add_row(block.name(k), sense, rhs, &terms);
        }
        Ok(block)
    }

    pub(super) fn run(mut self) -> Result<BuiltModel, ModelError> {
        let system = self.system;
        let n_t = self.n_t;
        let scale = self.scale();
        let carbon_price = match self.config.emissions_policy(system) {
            EmissionsPolicy::Price(p) => p,
            _ => 0.0,
        };

        // Investment columns.
        let mut cap = Vec::with_capacity(system.resources.len());
        let mut energy = Vec::with_capacity(system.resources.len());
        for r in &system.resources {
            let forced = self.is_forced(r);
            let (lo, hi) = if forced {
                (0.0, INF)
            } else {
                (r.existing_capacity, r.max_capacity.unwrap_or(INF).max(r.existing_capacity))
            };
            let fixed = if forced { 0.0 } else { r.fixed_cost };
            let b = self.var_block("cap", &r.id, IndexKind::Scalar, 1, |_| (scale * fixed, lo, hi))?;
            cap.push(b.start);
            if r.is_storage() {
                let e_cost = if forced { 0.0 } else { r.energy_cost };
                let b = self.var_block("energy", &r.id, IndexKind::Scalar, 1, |_| {
                    (scale * e_cost, 0.0, INF)
                })?;
                energy.push(Some(b.start));
            } else {
                energy.push(None);
            }
        }
        let mut line_exp = Vec::with_capacity(system.lines.len());
        for l in &system.lines {
            if l.expandable {
                let b = self.var_block("line_exp", &l.id, IndexKind::Scalar, 1, |_| {
                    (scale * l.expansion_cost, 0.0, INF)
                })?;
                line_exp.push(Some(b.start));
            } else {
                line_exp.push(None);
            }
        }

        // Operational columns.
        let weights = self.weights.clone();
        let mut gen: Vec<Option<Block>> = Vec::with_capacity(system.resources.len());
        let mut storage: Vec<Option<StorageCols>> = Vec::with_capacity(system.resources.len());
        let virtual_on = self.config.has_virtual();
        let decomposed = self.config.formulation == StorageFormulation::Decomposed;
        for r in &system.resources {
            if r.is_storage() {
                let dis = self.var_block("dis", &r.id, IndexKind::Timestep, n_t, |t| {
                    (scale * weights[t] * r.variable_cost, 0.0, INF)
                })?;
                let chg = self.var_block("chg", &r.id, IndexKind::Timestep, n_t, |_| (0.0, 0.0, INF))?;
                let soc_lo = if decomposed && self.linked(r) { -INF } else { 0.0 };
                let soc = self.var_block("soc", &r.id, IndexKind::Timestep, n_t, |_| (0.0, soc_lo, INF))?;
                let virt = if virtual_on {
                    let vdis = self.var_block("vdis", &r.id, IndexKind::Timestep, n_t, |_| (0.0, 0.0, INF))?;
                    let vchg = self.var_block("vchg", &r.id, IndexKind::Timestep, n_t, |_| (0.0, 0.0, INF))?;
                    let vsoc = self.var_block("vsoc", &r.id, IndexKind::Timestep, n_t, |_| (0.0, 0.0, INF))?;
                    Some((vdis, vchg, vsoc))
                } else {
                    None
                };
                gen.push(None);
                storage.push(Some(StorageCols { dis, chg, soc, virt }));
            } else {
                let c = r.variable_cost + carbon_price * r.emissions_rate;
                let b = self.var_block("gen", &r.id, IndexKind::Timestep, n_t, |t| {
                    (scale * weights[t] * c, 0.0, INF)
                })?;
                gen.push(Some(b));
                storage.push(None);
            }
        }
        let mut flows = Vec::with_capacity(system.lines.len());
        for (l, exp) in system.lines.iter().zip(&line_exp) {
            let hi = if exp.is_some() { INF } else { l.capacity };
            let fwd = self.var_block("flow_fwd", &l.id, IndexKind::Timestep, n_t, |_| (0.0, 0.0, hi))?;
            let bwd = self.var_block("flow_bwd", &l.id, IndexKind::Timestep, n_t, |_| (0.0, 0.0, hi))?;
            flows.push((fwd, bwd));
        }
        let voll = system.value_of_lost_load;
        let mut unserved = Vec::with_capacity(system.zones.len());
        for z in &system.zones {
            let b = self.var_block("unserved", &z.id, IndexKind::Timestep, n_t, |t| {
                (scale * weights[t] * voll, 0.0, INF)
            })?;
            unserved.push(b);
        }

        // Power balance per zone and timestep.
        for (zi, z) in system.zones.iter().enumerate() {
            let demand = &system.demand[zi];
            let source = self.source.clone();
            let block = self.row_block("balance", &z.id, IndexKind::Timestep, n_t, |t| {
                (RowSense::Eq, demand[source[t]], vec![(unserved[zi].at(t), 1.0)])
            })?;
            for (ri, r) in system.resources.iter().enumerate() {
                if r.zone != z.id {
                    continue;
                }
                for t in 0..n_t {
                    let row = block.at(t);
                    match (&gen[ri], &storage[ri]) {
                        (Some(g), _) => self.lp.add_term(row, g.at(t), 1.0),
                        (None, Some(s)) => {
                            self.lp.add_term(row, s.dis.at(t), 1.0);
                            self.lp.add_term(row, s.chg.at(t), -1.0);
                        }
                        (None, None) => unreachable!(),
                    }
                }
            }
            for (li, l) in system.lines.iter().enumerate() {
                let (fwd, bwd) = &flows[li];
                let keep = 1.0 - l.loss_fraction;
                for t in 0..n_t {
                    let row = block.at(t);
                    if l.from_zone == z.id {
                        self.lp.add_term(row, fwd.at(t), -1.0);
                        self.lp.add_term(row, bwd.at(t), keep);
                    }
                    if l.to_zone == z.id {
                        self.lp.add_term(row, fwd.at(t), keep);
                        self.lp.add_term(row, bwd.at(t), -1.0);
                    }
                }
            }
        }

        // Generation limits.
        for (ri, r) in system.resources.iter().enumerate() {
            let Some(g) = &gen[ri] else { continue };
            let cf: Option<&[f64]> = match r.kind {
                ResourceKind::Vre => Some(system.profile(&r.id).expect("validated profile")),
                _ => None,
            };
            let source = &self.source;
            let rows: Vec<(RowSense, f64, Vec<(usize, f64)>)> = (0..n_t)
                .map(|t| {
                    let f = cf.map_or(1.0, |p| p[source[t]]);
                    (RowSense::Le, 0.0, vec![(g.at(t), 1.0), (cap[ri], -f)])
                })
                .collect();
            let mut rows = rows.into_iter();
            self.row_block("gen_limit", &r.id, IndexKind::Timestep, n_t, |_| rows.next().unwrap())?;
        }

        // Storage.
        for (ri, r) in system.resources.iter().enumerate() {
            let Some(s) = &storage[ri] else { continue };
            let e = energy[ri].expect("storage has an energy column");
            self.add_storage_intra(r, s, cap[ri], e)?;
            if self.linked(r) {
                self.add_ldes_linking(r, s, e)?;
            }
            let duration = match &self.config.forced_ldes {
                Some(f) if f.resource == r.id => Some(f.duration),
                _ => r.storage.as_ref().and_then(|p| p.duration),
            };
            if let Some(d) = duration {
                self.row_block("duration", &r.id, IndexKind::Scalar, 1, |_| {
                    (RowSense::Eq, 0.0, vec![(e, 1.0), (cap[ri], -d)])
                })?;
            }
        }

        // Expandable line limits.
        for (li, l) in system.lines.iter().enumerate() {
            let Some(x) = line_exp[li] else { continue };
            let (fwd, bwd) = (flows[li].0.clone(), flows[li].1.clone());
            self.row_block("flow_cap_fwd", &l.id, IndexKind::Timestep, n_t, |t| {
                (RowSense::Le, l.capacity, vec![(fwd.at(t), 1.0), (x, -1.0)])
            })?;
            self.row_block("flow_cap_bwd", &l.id, IndexKind::Timestep, n_t, |t| {
                (RowSense::Le, l.capacity, vec![(bwd.at(t), 1.0), (x, -1.0)])
            })?;
        }

        if self.config.crm_enabled {
            self.add_crm(&cap, &gen, &storage)?;
        }
        self.add_emissions(&gen)?;
        let forced_row = self.add_forced_capacity(&cap)?;

        let lp = self.lp.finish()?;
        debug_assert_eq!(self.vars.len(), lp.n_cols());
        debug_assert_eq!(self.cons.len(), lp.n_rows());
        Ok(BuiltModel {
            lp,
            vars: self.vars,
            cons: self.cons,
            rps: self.rps.clone(),
            config: self.config.clone(),
            weights: self.weights,
            forced_row,
        })
    }

    /// Intra-period state-of-charge balance, energy and power limits, and the
    /// virtual state-of-charge tracking when enabled.
    ///
    /// For linked resources the start-of-period rows are left without their
    /// wrap terms; [`Assembly::add_ldes_linking`] supplies them.
    fn add_storage_intra(
        &mut self,
        r: &Resource,
        s: &StorageCols,
        cap: usize,
        e: usize,
    ) -> Result<(), ModelError> {
        let p = r.storage.as_ref().expect("validated storage params");
        let (eta_c, eta_d, loss) = (p.charge_efficiency, p.discharge_efficiency, p.self_discharge);
        let keep = 1.0 - loss;
        let linked = self.linked(r);
        let decomposed = linked && self.config.formulation == StorageFormulation::Decomposed;
        let tau = self.tau;
        let n_t = self.n_t;

        let wrap = |t: usize| -> Option<usize> {
            if t % tau != 0 {
                Some(t - 1)
            } else if linked {
                None
            } else {
                Some(t + tau - 1)
            }
        };
        self.row_block("soc_balance", &r.id, IndexKind::Timestep, n_t, |t| {
            let mut terms = vec![
                (s.soc.at(t), 1.0),
                (s.dis.at(t), 1.0 / eta_d),
                (s.chg.at(t), -eta_c),
            ];
            if let Some(prev) = wrap(t) {
                terms.push((s.soc.at(prev), -keep));
            }
            (RowSense::Eq, 0.0, terms)
        })?;
        self.row_block("soc_cap", &r.id, IndexKind::Timestep, n_t, |t| {
            (RowSense::Le, 0.0, vec![(s.soc.at(t), 1.0), (e, -1.0)])
        })?;
        if decomposed {
            self.row_block("soc_floor", &r.id, IndexKind::Timestep, n_t, |t| {
                (RowSense::Ge, 0.0, vec![(s.soc.at(t), 1.0), (e, 1.0)])
            })?;
        }

        let virt = s.virt.clone();
        if p.symmetric {
            self.row_block("power", &r.id, IndexKind::Timestep, n_t, |t| {
                let mut terms = vec![(s.dis.at(t), 1.0), (s.chg.at(t), 1.0), (cap, -1.0)];
                if let Some((vdis, vchg, _)) = &virt {
                    terms.push((vdis.at(t), 1.0));
                    terms.push((vchg.at(t), 1.0));
                }
                (RowSense::Le, 0.0, terms)
            })?;
        } else {
            self.row_block("dis_power", &r.id, IndexKind::Timestep, n_t, |t| {
                let mut terms = vec![(s.dis.at(t), 1.0), (cap, -1.0)];
                if let Some((vdis, _, _)) = &virt {
                    terms.push((vdis.at(t), 1.0));
                }
                (RowSense::Le, 0.0, terms)
            })?;
            self.row_block("chg_power", &r.id, IndexKind::Timestep, n_t, |t| {
                let mut terms = vec![(s.chg.at(t), 1.0), (cap, -1.0)];
                if let Some((_, vchg, _)) = &virt {
                    terms.push((vchg.at(t), 1.0));
                }
                (RowSense::Le, 0.0, terms)
            })?;
        }

        if let Some((vdis, vchg, vsoc)) = virt {
            // Virtual state of charge wraps within each period.
            self.row_block("vsoc_balance", &r.id, IndexKind::Timestep, n_t, |t| {
                let prev = if t % tau != 0 { t - 1 } else { t + tau - 1 };
                (
                    RowSense::Eq,
                    0.0,
                    vec![
                        (vsoc.at(t), 1.0),
                        (vsoc.at(prev), -keep),
                        (vdis.at(t), -1.0 / eta_d),
                        (vchg.at(t), eta_c),
                    ],
                )
            })?;
            self.row_block("vsoc_sub", &r.id, IndexKind::Timestep, n_t, |t| {
                (RowSense::Ge, 0.0, vec![(s.soc.at(t), 1.0), (vsoc.at(t), -1.0)])
            })?;
            self.row_block("dis_soc", &r.id, IndexKind::Timestep, n_t, |t| {
                let mut terms = vec![(s.dis.at(t), 1.0), (vdis.at(t), 1.0)];
                if let Some(prev) = wrap(t) {
                    terms.push((s.soc.at(prev), -1.0));
                }
                (RowSense::Le, 0.0, terms)
            })?;
        }
        Ok(())
    }

    /// Inter-period state of charge for a linked long-duration resource.
    fn add_ldes_linking(&mut self, r: &Resource, s: &StorageCols, e: usize) -> Result<(), ModelError> {
        let p = r.storage.as_ref().expect("validated storage params");
        let keep = 1.0 - p.self_discharge;
        let n_m = self.rps.len();
        let n_n = self.rps.n_input_periods();
        let slot_of = self.rps.slot_mapping();

        let dq = self.var_block("dq", &r.id, IndexKind::RepPeriod, n_m, |_| (0.0, -INF, INF))?;
        let q = self.var_block("q", &r.id, IndexKind::InputPeriod, n_n, |_| (0.0, 0.0, INF))?;

        match self.config.formulation {
            StorageFormulation::Improved => {
                // Modified wrap: the period starts from its end level minus
                // its net change.
                let balance = self.cons.get("soc_balance", &r.id).cloned().expect("intra rows");
                let dis_soc = self.cons.get("dis_soc", &r.id).cloned();
                for m in 0..n_m {
                    let (first, last) = (self.first(m), self.last(m));
                    self.lp.add_term(balance.at(first), s.soc.at(last), -keep);
                    self.lp.add_term(balance.at(first), dq.at(m), keep);
                    if let Some(rows) = &dis_soc {
                        self.lp.add_term(rows.at(first), s.soc.at(last), -1.0);
                        self.lp.add_term(rows.at(first), dq.at(m), 1.0);
                    }
                }
                // Start-of-period anchor Q_n = Γ_end(f(n)) − ΔQ_f(n).
                let anchors: Vec<usize> = match self.config.link_anchor {
                    super::LinkAnchor::Representatives => self.rps.representatives.clone(),
                    super::LinkAnchor::AllInputPeriods => (0..n_n).collect(),
                };
                let kind = match self.config.link_anchor {
                    super::LinkAnchor::Representatives => IndexKind::RepPeriod,
                    super::LinkAnchor::AllInputPeriods => IndexKind::InputPeriod,
                };
                let ends: Vec<usize> = (0..n_m).map(|m| self.last(m)).collect();
                self.row_block("link", &r.id, kind, anchors.len(), |k| {
                    let n = anchors[k];
                    let m = slot_of[n];
                    (
                        RowSense::Eq,
                        0.0,
                        vec![(q.at(n), 1.0), (s.soc.at(ends[m]), -1.0), (dq.at(m), 1.0)],
                    )
                })?;
            }
            StorageFormulation::Decomposed => {
                let ends: Vec<usize> = (0..n_m).map(|m| self.last(m)).collect();
                self.row_block("dq_def", &r.id, IndexKind::RepPeriod, n_m, |m| {
                    (RowSense::Eq, 0.0, vec![(dq.at(m), 1.0), (s.soc.at(ends[m]), -1.0)])
                })?;
            }
        }
        // Q_{n+1} = Q_n + ΔQ_f(n), wrapping at the end of the year.
        self.row_block("sequence", &r.id, IndexKind::InputPeriod, n_n, |n| {
            (
                RowSense::Eq,
                0.0,
                vec![(q.at((n + 1) % n_n), 1.0), (q.at(n), -1.0), (dq.at(slot_of[n]), -1.0)],
            )
        })?;
        self.row_block("q_cap", &r.id, IndexKind::InputPeriod, n_n, |n| {
            (RowSense::Le, 0.0, vec![(q.at(n), 1.0), (e, -1.0)])
        })?;
        Ok(())
    }

    /// Reserve margin per interconnection region and timestep.
    fn add_crm(
        &mut self,
        cap: &[usize],
        gen: &[Option<Block>],
        storage: &[Option<StorageCols>],
    ) -> Result<(), ModelError> {
        let system = self.system;
        let n_t = self.n_t;
        let margin = 1.0 + system.crm_margin;
        let shortfall = self.scale() * self.config.crm_shortfall_cost;
        for (region, zones) in system.crm_regions() {
            let short = self.var_block("crm_short", &region, IndexKind::Timestep, n_t, |_| {
                (shortfall, 0.0, INF)
            })?;
            let source = self.source.clone();
            let block = self.row_block("crm", &region, IndexKind::Timestep, n_t, |t| {
                let demand: f64 = zones.iter().map(|&z| system.demand[z][source[t]]).sum();
                (RowSense::Ge, margin * demand, vec![(short.at(t), 1.0)])
            })?;
            let zone_ids: Vec<&str> = zones.iter().map(|&z| system.zones[z].id.as_str()).collect();
            for (ri, r) in system.resources.iter().enumerate() {
                if !zone_ids.contains(&r.zone.as_str()) || r.crm_derate == 0.0 {
                    continue;
                }
                let eps = r.crm_derate;
                for t in 0..n_t {
                    let row = block.at(t);
                    match r.kind {
                        ResourceKind::Thermal => self.lp.add_term(row, cap[ri], eps),
                        ResourceKind::Vre => {
                            let cf = system.profile(&r.id).expect("validated profile")[source[t]];
                            self.lp.add_term(row, cap[ri], eps * cf);
                        }
                        ResourceKind::Storage => {
                            let s = storage[ri].as_ref().expect("storage columns");
                            self.lp.add_term(row, s.dis.at(t), eps);
                            self.lp.add_term(row, s.chg.at(t), -eps);
                            if let Some((vdis, vchg, _)) = &s.virt {
                                self.lp.add_term(row, vdis.at(t), eps);
                                self.lp.add_term(row, vchg.at(t), -eps);
                            }
                        }
                    }
                }
                debug_assert!(gen[ri].is_some() || r.is_storage());
            }
        }
        Ok(())
    }

    /// Annual emissions cap. Prices are applied to dispatch costs instead.
    fn add_emissions(&mut self, gen: &[Option<Block>]) -> Result<(), ModelError> {
        let EmissionsPolicy::Cap(limit) = self.config.emissions_policy(self.system) else {
            return Ok(());
        };
        let mut terms = Vec::new();
        for (ri, r) in self.system.resources.iter().enumerate() {
            let Some(g) = &gen[ri] else { continue };
            if r.emissions_rate == 0.0 {
                continue;
            }
            for t in 0..self.n_t {
                terms.push((g.at(t), self.weights[t] * r.emissions_rate));
            }
        }
        self.row_block("emissions", "system", IndexKind::Scalar, 1, |_| {
            (RowSense::Le, limit, std::mem::take(&mut terms))
        })?;
        Ok(())
    }

    /// `cap = K` on the forced resource; its dual prices the capacity.
    fn add_forced_capacity(&mut self, cap: &[usize]) -> Result<Option<usize>, ModelError> {
        let Some(f) = self.config.forced_ldes.clone() else {
            return Ok(None);
        };
        let ri = self
            .system
            .resource_index(&f.resource)
            .ok_or_else(|| ModelError::MissingResource(f.resource.clone()))?;
        let block = self.row_block("forced", &f.resource, IndexKind::Scalar, 1, |_| {
            (RowSense::Eq, f.capacity, vec![(cap[ri], 1.0)])
        })?;
        Ok(Some(block.start))
    }
}
