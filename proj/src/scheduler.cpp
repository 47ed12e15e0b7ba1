#include "qpnn/scheduler.hpp"

#include <array>
#include <map>
#include <optional>
#include <sstream>

namespace qpnn {

LoopGeometry LoopGeometry::for_modes(int num_modes) {
    if (num_modes < 3) throw ValidationError("LoopGeometry: the two-loop schedule needs at least 3 modes");
    const int h = (num_modes + 1) / 2;
    return {num_modes, h, h + 1, num_modes % 2 == 0};
}

Matrix2c MziControl::port_matrix() const {
    switch (kind) {
        case MziKind::Bar:
            return Matrix2c::Identity();
        case MziKind::Cross: {
            Matrix2c x;
            x << 0, 1, 1, 0;
            return x;
        }
        case MziKind::Apply:
            break;
    }
    Matrix2c swap;
    swap << 0, 1, 1, 0;
    Matrix2c p_in = lower_in_top ? Matrix2c(Matrix2c::Identity()) : swap;
    Matrix2c p_out = lower_out_top ? Matrix2c(Matrix2c::Identity()) : swap;
    return p_out * mzi_unitary(setting) * p_in;
}

namespace {

bool plans_equal(const MeshPlan& a, const MeshPlan& b) {
    if (a.num_modes != b.num_modes || a.placements.size() != b.placements.size()) return false;
    for (std::size_t i = 0; i < a.placements.size(); ++i) {
        const auto& p = a.placements[i];
        const auto& q = b.placements[i];
        if (p.column != q.column || p.mode != q.mode || !(p.setting == q.setting)) return false;
    }
    return a.output_phases.size() == b.output_phases.size() && a.output_phases == b.output_phases;
}

constexpr int kTop = 0;
constexpr int kBottom = 1;

struct MziRequirement {
    bool apply = false;
    MziControl control;
    std::array<int, 2> route{-1, -1};  // route[in_port] = out_port
};

struct LayerEvents {
    std::vector<std::pair<int, int>> ins;   // (t, label)
    std::vector<std::pair<int, int>> outs;  // (t, label)
    std::map<int, MziRequirement> mzi;
};

int cycle_base(const LoopGeometry& g, int k) {
    const int h = g.top_capacity;
    return h + g.s2_to_mzi() + k * (2 * h + 1);
}

void add_route(LayerEvents& ev, int t, std::initializer_list<std::pair<int, int>> ports) {
    MziRequirement& r = ev.mzi[t];
    for (auto [in, out] : ports) r.route[in] = out;
}

LayerEvents layer_events(const LoopGeometry& g, const MeshPlan& plan, int layer) {
    const int h = g.top_capacity;
    const int a = g.s2_to_mzi();
    const int c = g.mzi_to_s2();
    std::map<std::pair<int, int>, const Placement*> slot;
    for (const auto& p : plan.placements) slot[{p.column, p.mode}] = &p;

    LayerEvents ev;
    auto apply = [&](int column, int mode, bool lower_in_top, bool lower_out_top) {
        const int t = placement_time(g, column, mode);
        MziRequirement r;
        r.apply = true;
        r.control.kind = MziKind::Apply;
        r.control.layer = layer;
        r.control.column = column;
        r.control.mode_i = mode + 1;
        r.control.mode_j = mode + 2;
        r.control.setting = slot.at({column, mode})->setting;
        r.control.lower_in_top = lower_in_top;
        r.control.lower_out_top = lower_out_top;
        ev.mzi[t] = r;
    };

    // Odd labels first, then even labels (and the ancilla for even N).
    for (int q = 0; q < h; ++q) {
        ev.ins.emplace_back(q, 2 * q + 1);
        add_route(ev, q + a, {{kBottom, kTop}});
    }
    const int n_even = g.ancilla ? h : h - 1;
    for (int q = 0; q < n_even; ++q) ev.ins.emplace_back(h + q, 2 * q + 2);
    if (g.ancilla) ev.ins.emplace_back(2 * h, g.ancilla_label());

    if (g.ancilla) {
        for (int k = 0; k < h; ++k) {
            const int base = cycle_base(g, k);
            for (int j = 0; j < h; ++j) apply(2 * k, 2 * j, k == 0, true);
            add_route(ev, base + h, {{kTop, kBottom}, {kBottom, kTop}});  // m1 <-> ancilla
            for (int j = 0; j + 1 < h; ++j) apply(2 * k + 1, 2 * j + 1, false, true);
            add_route(ev, base + 2 * h, {{kTop, kBottom}, {kBottom, kTop}});  // ancilla <-> m_N
        }
        const int te = cycle_base(g, h);
        for (int j = 0; j < h; ++j) {
            add_route(ev, te + j, {{kTop, kTop}, {kBottom, kBottom}});
            ev.outs.emplace_back(te + j + c, 2 * j + 1);
        }
        add_route(ev, te + h, {{kTop, kBottom}, {kBottom, kTop}});
        for (int j = 1; j < h; ++j) add_route(ev, te + h + j, {{kTop, kBottom}});
        add_route(ev, te + 2 * h, {{kTop, kBottom}});
        for (int j = 0; j < h; ++j) ev.outs.emplace_back(te + h + j + c, 2 * j + 2);
        ev.outs.emplace_back(te + 2 * h + c, g.ancilla_label());
    } else {
        for (int k = 0; k < h; ++k) {
            const int base = cycle_base(g, k);
            const bool last = (k == h - 1);
            for (int j = 0; j + 1 < h; ++j) apply(2 * k, 2 * j, k == 0, !last);
            // m_N has no partner in the odd columns.
            if (k == 0)
                add_route(ev, base + h - 1, {{kTop, kTop}});
            else if (!last)
                add_route(ev, base + h - 1, {{kBottom, kTop}});
            else
                add_route(ev, base + h - 1, {{kBottom, kBottom}});
            if (!last) {
                add_route(ev, base + h, {{kTop, kBottom}});
                for (int j = 0; j + 1 < h; ++j) apply(2 * k + 1, 2 * j + 1, false, true);
            }
        }
        const int bl = cycle_base(g, h - 1);
        for (int j = 0; j < h; ++j) ev.outs.emplace_back(bl + j + c, 2 * j + 1);
        for (int j = 0; j + 1 < h; ++j) {
            add_route(ev, bl + h + j, {{kTop, kBottom}});
            ev.outs.emplace_back(bl + h + j + c, 2 * j + 2);
        }
    }
    return ev;
}

void check_placements(const LoopGeometry& g, const MeshPlan& plan) {
    if (plan.num_modes != g.num_modes) throw ValidationError("compile_schedule: plan/geometry mode count mismatch");
    std::map<std::pair<int, int>, int> valid;
    for (auto [c, m] : rectangular_slots(plan.num_modes)) valid[{c, m}] = 0;
    std::map<int, int> at_time;
    for (std::size_t i = 0; i < plan.placements.size(); ++i) {
        const auto& p = plan.placements[i];
        auto it = valid.find({p.column, p.mode});
        if (it == valid.end()) {
            std::ostringstream msg;
            msg << "compile_schedule: placement " << i << " (column " << p.column << ", mode " << p.mode
                << ") is not a slot of the rectangular mesh";
            throw ValidationError(msg.str());
        }
        const int t = placement_time(g, p.column, p.mode);
        auto [pos, fresh] = at_time.emplace(t, static_cast<int>(i));
        if (!fresh) {
            std::ostringstream msg;
            msg << "compile_schedule: placements " << pos->second << " and " << i << " (column " << p.column
                << ", mode " << p.mode << ") both claim the MZI at timestep t=" << t;
            throw ValidationError(msg.str());
        }
    }
    for (auto [c, m] : rectangular_slots(plan.num_modes)) {
        const int t = placement_time(g, c, m);
        if (!at_time.count(t)) {
            std::ostringstream msg;
            msg << "compile_schedule: no placement for column " << c << ", mode " << m << " (timestep t=" << t << ")";
            throw ValidationError(msg.str());
        }
    }
    validate_plan(plan);
}

Schedule assemble(const LoopGeometry& g, const std::vector<MeshPlan>& plans, int buffer, bool final_traverse) {
    if (buffer < 0) throw ValidationError("schedule: buffer must be non-negative");
    const int layers = static_cast<int>(plans.size());
    const int stride = g.linear_span() + buffer;
    std::map<int, MziRequirement> merged;
    std::map<int, ScheduleStep> s2_steps;
    int last = 0;
    Schedule s;
    s.geometry = g;
    s.buffer = buffer;
    s.plans = plans;

    for (int l = 0; l < layers; ++l) {
        const int offset = l * stride;
        s.layer_offsets.push_back(offset);
        const bool traverse = (l + 1 < layers) || final_traverse;
        LayerEvents ev = layer_events(g, plans[l], l);
        for (const auto& [t_rel, req] : ev.mzi) {
            const int t = t_rel + offset;
            last = std::max(last, t);
            auto [it, fresh] = merged.emplace(t, req);
            if (fresh) continue;
            MziRequirement& m = it->second;
            if (m.apply || req.apply) {
                std::ostringstream msg;
                msg << "schedule: conflicting MZI use at timestep t=" << t;
                throw VerificationError(msg.str());
            }
            for (int p = 0; p < 2; ++p) {
                if (req.route[p] < 0) continue;
                if (m.route[p] >= 0 && m.route[p] != req.route[p]) {
                    std::ostringstream msg;
                    msg << "schedule: incompatible routing at timestep t=" << t;
                    throw VerificationError(msg.str());
                }
                m.route[p] = req.route[p];
            }
        }
        for (auto [t_rel, label] : ev.ins) {
            const int t = t_rel + offset;
            ScheduleStep& st = s2_steps[t];
            if (st.s2.couple_in != 0) throw VerificationError("schedule: two couple-in events at one timestep");
            st.s2.couple_in = label;
            st.s2.in_layer = l;
            last = std::max(last, t);
        }
        for (auto [t_rel, label] : ev.outs) {
            const int t = t_rel + offset;
            ScheduleStep& st = s2_steps[t];
            if (st.s2.couple_out != 0) throw VerificationError("schedule: two couple-out events at one timestep");
            st.s2.couple_out = label;
            st.s2.out_layer = l;
            st.ps = label <= g.num_modes ? plans[l].output_phases(label - 1) : 0.0;
            st.route = traverse ? Route::Traverse : Route::Bypass;
            last = std::max(last, traverse ? t + buffer : t);
        }
    }

    s.n_t = last + 1;
    s.steps.resize(s.n_t);
    for (int t = 0; t < s.n_t; ++t) s.steps[t].t = t;
    for (const auto& [t, st] : s2_steps) {
        s.steps[t].s2 = st.s2;
        s.steps[t].ps = st.ps;
        s.steps[t].route = st.route;
    }
    for (const auto& [t, req] : merged) {
        MziControl& ctl = s.steps[t].mzi;
        if (req.apply) {
            ctl = req.control;
            continue;
        }
        if (req.route[0] >= 0 && req.route[0] == req.route[1]) {
            std::ostringstream msg;
            msg << "schedule: two bins routed to one port at timestep t=" << t;
            throw VerificationError(msg.str());
        }
        bool bar = false, cross = false;
        for (int p = 0; p < 2; ++p) {
            if (req.route[p] < 0) continue;
            (req.route[p] == p ? bar : cross) = true;
        }
        if (bar && cross) {
            std::ostringstream msg;
            msg << "schedule: routing at timestep t=" << t << " is neither bar nor cross";
            throw VerificationError(msg.str());
        }
        ctl.kind = cross ? MziKind::Cross : MziKind::Bar;
    }
    return s;
}

}  // namespace

bool operator==(const Schedule& a, const Schedule& b) {
    if (!(a.geometry == b.geometry) || a.n_t != b.n_t || a.buffer != b.buffer || a.steps != b.steps ||
        a.layer_offsets != b.layer_offsets || a.plans.size() != b.plans.size())
        return false;
    for (std::size_t i = 0; i < a.plans.size(); ++i)
        if (!plans_equal(a.plans[i], b.plans[i])) return false;
    return true;
}

int placement_time(const LoopGeometry& g, int column, int mode) {
    const int base = cycle_base(g, column / 2);
    if (column % 2 == 0) return base + mode / 2;
    return base + g.top_capacity + 1 + (mode - 1) / 2;
}

Schedule compile_schedule(const MeshPlan& plan, int buffer) {
    if (buffer < 0) throw ValidationError("compile_schedule: buffer must be non-negative");
    LoopGeometry g = LoopGeometry::for_modes(plan.num_modes);
    check_placements(g, plan);
    return assemble(g, {plan}, buffer, buffer > 0);
}

Schedule compose_layers(const std::vector<Schedule>& schedules, int buffer) {
    if (schedules.empty()) throw ValidationError("compose_layers: no schedules given");
    std::vector<MeshPlan> plans;
    for (const auto& s : schedules) {
        if (!(s.geometry == schedules.front().geometry))
            throw ValidationError("compose_layers: schedules have different loop geometries");
        plans.insert(plans.end(), s.plans.begin(), s.plans.end());
    }
    for (const auto& p : plans) check_placements(schedules.front().geometry, p);
    return assemble(schedules.front().geometry, plans, buffer, false);
}

namespace {

struct Flight {
    std::map<int, ComplexVector> slots;
    const char* name;

    void put(int t, ComplexVector v, int now) {
        auto [it, fresh] = slots.emplace(t, std::move(v));
        if (!fresh) {
            std::ostringstream msg;
            msg << "simulate_schedule: collision at timestep t=" << now << " (two bins routed into the " << name
                << " slot arriving at t=" << t << ")";
            throw VerificationError(msg.str());
        }
    }
    std::optional<ComplexVector> take(int t) {
        auto it = slots.find(t);
        if (it == slots.end()) return std::nullopt;
        ComplexVector v = std::move(it->second);
        slots.erase(it);
        return v;
    }
};

}  // namespace

SimulationReport simulate_schedule_report(const Schedule& schedule) {
    const LoopGeometry& g = schedule.geometry;
    const int h = g.top_capacity;
    const int a = g.s2_to_mzi();
    const int c = g.mzi_to_s2();
    const int labels = g.num_labels();
    const int layers = std::max(schedule.num_layers(), 1);

    Flight top{{}, "top loop"}, to_s2{{}, "bottom loop (before S2)"}, to_mzi{{}, "bottom loop (after S2)"};
    std::map<int, std::pair<int, ComplexVector>> outer;
    std::map<int, ComplexVector> final_rows;
    SimulationReport rep;
    rep.exit_order.assign(layers, {});
    rep.entry_order.assign(layers, {});

    auto emit_final = [&](int label, ComplexVector v, int t) {
        if (!final_rows.emplace(label, std::move(v)).second) {
            std::ostringstream msg;
            msg << "simulate_schedule: label " << label << " left the processor twice (t=" << t << ")";
            throw VerificationError(msg.str());
        }
    };

    for (int t = 0; t < schedule.n_t; ++t) {
        const ScheduleStep& st = schedule.steps[t];
        // S2 switch.
        std::optional<ComplexVector> passing = to_s2.take(t);
        if (st.s2.couple_out != 0) {
            if (!passing) {
                std::ostringstream msg;
                msg << "simulate_schedule: couple-out of label " << st.s2.couple_out << " at t=" << t
                    << " found an empty bin";
                throw VerificationError(msg.str());
            }
            ComplexVector v = *passing * std::exp(kI * st.ps);
            passing.reset();
            rep.exit_order[std::max(st.s2.out_layer, 0)].push_back(st.s2.couple_out);
            if (st.route == Route::Traverse) {
                if (!outer.emplace(t + schedule.buffer, std::make_pair(st.s2.couple_out, v)).second) {
                    std::ostringstream msg;
                    msg << "simulate_schedule: collision in the nonlinear loop at t=" << t;
                    throw VerificationError(msg.str());
                }
            } else {
                emit_final(st.s2.couple_out, std::move(v), t);
            }
        }
        if (passing) to_mzi.put(t + a, std::move(*passing), t);
        if (st.s2.couple_in != 0) {
            ComplexVector v;
            if (st.s2.in_layer <= 0) {
                v = ComplexVector::Zero(labels);
                v(st.s2.couple_in - 1) = 1.0;
            } else {
                auto it = outer.find(t);
                if (it == outer.end()) {
                    std::ostringstream msg;
                    msg << "simulate_schedule: couple-in at t=" << t << " has no bin returning from the nonlinear loop";
                    throw VerificationError(msg.str());
                }
                v = std::move(it->second.second);
                outer.erase(it);
            }
            rep.entry_order[std::max(st.s2.in_layer, 0)].push_back(st.s2.couple_in);
            to_mzi.put(t + a, std::move(v), t);
        }

        // MZI.
        std::optional<ComplexVector> in_top = top.take(t), in_bottom = to_mzi.take(t);
        if (in_top || in_bottom) {
            const ComplexVector zero = ComplexVector::Zero(labels);
            const ComplexVector& vt = in_top ? *in_top : zero;
            const ComplexVector& vb = in_bottom ? *in_bottom : zero;
            switch (st.mzi.kind) {
                case MziKind::Bar:
                    if (in_top) top.put(t + h, vt, t);
                    if (in_bottom) to_s2.put(t + c, vb, t);
                    break;
                case MziKind::Cross:
                    if (in_bottom) top.put(t + h, vb, t);
                    if (in_top) to_s2.put(t + c, vt, t);
                    break;
                case MziKind::Apply: {
                    Matrix2c m = st.mzi.port_matrix();
                    top.put(t + h, m(0, 0) * vt + m(0, 1) * vb, t);
                    to_s2.put(t + c, m(1, 0) * vt + m(1, 1) * vb, t);
                    break;
                }
            }
        }
        if (st.mzi.kind == MziKind::Apply) ++rep.apply_count;
        rep.max_top_occupancy = std::max(rep.max_top_occupancy, static_cast<int>(top.slots.size()));
        rep.max_bottom_occupancy =
            std::max(rep.max_bottom_occupancy, static_cast<int>(to_s2.slots.size() + to_mzi.slots.size()));
        if (rep.max_top_occupancy > g.top_capacity || rep.max_bottom_occupancy > g.bottom_capacity) {
            std::ostringstream msg;
            msg << "simulate_schedule: loop capacity exceeded at t=" << t;
            throw VerificationError(msg.str());
        }
    }
    if (!top.slots.empty() || !to_s2.slots.empty() || !to_mzi.slots.empty())
        throw VerificationError("simulate_schedule: bins remain in the loops after the last step");
    for (auto& [t, entry] : outer) emit_final(entry.first, std::move(entry.second), t);

    ComplexMatrix full(labels, labels);
    for (int label = 1; label <= labels; ++label) {
        auto it = final_rows.find(label);
        if (it == final_rows.end()) {
            std::ostringstream msg;
            msg << "simulate_schedule: label " << label << " never left the processor";
            throw VerificationError(msg.str());
        }
        full.row(label - 1) = it->second.transpose();
    }
    if (g.ancilla) {
        const int k = labels - 1;
        double leak = full.row(k).norm() * full.row(k).norm() - std::norm(full(k, k));
        leak += full.col(k).squaredNorm() - std::norm(full(k, k));
        if (std::abs(std::abs(full(k, k)) - 1.0) > 1e-12 || leak > 1e-24)
            throw VerificationError("simulate_schedule: amplitude leaked into or out of the ancillary mode");
    }
    rep.unitary = full.topLeftCorner(g.num_modes, g.num_modes);
    return rep;
}

ComplexMatrix simulate_schedule(const Schedule& schedule) { return simulate_schedule_report(schedule).unitary; }

int first_mode_span(const Schedule& schedule, int layer) {
    int t_in = -1, t_out = -1;
    Route route = Route::Bypass;
    for (const auto& st : schedule.steps) {
        if (st.s2.couple_in == 1 && st.s2.in_layer == layer) t_in = st.t;
        if (st.s2.couple_out == 1 && st.s2.out_layer == layer) {
            t_out = st.t;
            route = st.route;
        }
    }
    if (t_in < 0 || t_out < 0) throw ValidationError("first_mode_span: layer not present in schedule");
    return t_out - t_in + (route == Route::Traverse ? schedule.buffer : 0);
}

}  // namespace qpnn
