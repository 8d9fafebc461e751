#include "camsim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "camsim/errors.hpp"

namespace camsim {

CornerModel CornerModel::named(std::string_view name) {
    for (const auto& c : all())
        if (c.name == name) return c;
    throw ValidationError("unknown corner '" + std::string(name) + "' (ff, fs, tt, sf, ss)");
}

std::vector<CornerModel> CornerModel::all() {
    return {{"ff", 0.90, 1.10}, {"fs", 0.95, 1.05}, {"tt", 1.0, 1.0}, {"sf", 1.05, 0.95},
            {"ss", 1.10, 0.90}};
}

ArrayConfig apply_corner(ArrayConfig cfg, const CornerModel& corner) {
    for (MosParams* m : {&cfg.cell.q1, &cfg.cell.q2, &cfg.cell.q3}) {
        m->vth *= corner.vth_scale;
        m->k *= corner.k_scale;
    }
    return cfg;
}

void SweepPlan::validate() const {
    if (parameter != "supplies.vsec")
        throw ValidationError("only supplies.vsec can be swept, got '" + parameter + "'");
    if (!(step > 0.0)) throw ValidationError("sweep step must be positive");
    if (!(start <= stop)) throw ValidationError("sweep start must not exceed stop");
    if (start < kVsecMin - 1e-12 || stop > kVsecMax + 1e-12)
        throw ValidationError("V_SEC sweep must stay within [1.0, 1.4] V");
    if (warmup_searches < 0) throw ValidationError("warmup_searches must be >= 0");
}

std::vector<double> SweepPlan::points() const {
    validate();
    std::vector<double> x;
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long k = 0; k <= n; ++k) x.push_back(std::round((start + k * step) * 1e9) / 1e9);
    return x;
}

std::array<DataWord, 4> table2_data(int rows) {
    if (rows < 2) throw ValidationError("the 4x4 suite needs at least two rows");
    const auto H = ResistiveState::hrs();
    const auto L = ResistiveState::lrs();
    std::array<DataWord, 4> d{DataWord(rows, H), DataWord(rows, L), DataWord(rows, H),
                              DataWord(rows, L)};
    d[2][0] = L;
    d[3][0] = H;
    return d;
}

std::array<CueWord, 4> table2_cues(int rows) {
    if (rows < 2) throw ValidationError("the 4x4 suite needs at least two rows");
    std::array<CueWord, 4> c{CueWord(rows, CueValue::One), CueWord(rows, CueValue::Zero),
                             CueWord(rows, CueValue::One), CueWord(rows, CueValue::Zero)};
    c[2][0] = CueValue::Zero;
    c[3][0] = CueValue::One;
    return c;
}

bool is_diagonal(int cue, int data) { return cue == data; }

bool is_worst_miss(int cue, int data) {
    static constexpr int partner[4] = {2, 3, 0, 1};
    return partner[cue] == data;
}

namespace {

struct Cell {
    int cue, data;
};

std::vector<Cell> gap_cells() {
    std::vector<Cell> cells;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            if (is_diagonal(r, c) || is_worst_miss(r, c)) cells.push_back({r, c});
    return cells;
}

std::vector<Cell> all_cells() {
    std::vector<Cell> cells;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) cells.push_back({r, c});
    return cells;
}

std::vector<SearchOutcome> run_cells(const std::vector<Cell>& cells, const ArrayConfig& cfg,
                                     int jobs) {
    const auto data = table2_data(cfg.rows);
    const auto cues = table2_cues(cfg.rows);
    std::vector<SearchOutcome> out(cells.size());
    std::vector<std::string> errors(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < cells.size(); k = next++) {
            try {
                out[k] = run_search(data[cells[k].data], cues[cells[k].cue], cfg, cells[k].data);
            } catch (const std::exception& e) {
                errors[k] = e.what();
            }
        }
    };
    const int workers = std::clamp(jobs, 1, static_cast<int>(cells.size()));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (std::size_t k = 0; k < cells.size(); ++k)
        if (!errors[k].empty())
            throw SolverError("search (cue " + std::to_string(cells[k].cue + 1) + ", data " +
                              std::to_string(cells[k].data + 1) + ") failed: " + errors[k]);
    return out;
}

GapReport gap_from(const std::vector<Cell>& cells, const std::vector<SearchOutcome>& out) {
    GapReport g;
    g.min_hit_v = std::numeric_limits<double>::infinity();
    g.max_worst_miss_v = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const auto [r, c] = cells[k];
        g.ml_sample_v[r][c] = out[k].ml_sample_v;
        g.measured[r][c] = true;
        if (is_diagonal(r, c)) g.min_hit_v = std::min(g.min_hit_v, out[k].ml_sample_v);
        if (is_worst_miss(r, c)) g.max_worst_miss_v = std::max(g.max_worst_miss_v, out[k].ml_sample_v);
    }
    g.gap_v = g.min_hit_v - g.max_worst_miss_v;
    return g;
}

}  // namespace

GapReport measure_gap(const ArrayConfig& cfg, int jobs) {
    const auto cells = gap_cells();
    return gap_from(cells, run_cells(cells, cfg, jobs));
}

Table2Result run_table2_suite(const ArrayConfig& cfg, bool calibrate, int jobs) {
    const auto cells = all_cells();
    const auto out = run_cells(cells, cfg, jobs);
    Table2Result res;
    res.vsec_v = cfg.cell.supplies.vsec;
    res.gap = gap_from(cells, out);
    res.vref_car_v = calibrate ? 0.5 * (res.gap.min_hit_v + res.gap.max_worst_miss_v)
                               : cfg.vref_car_v;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const auto [r, c] = cells[k];
        const auto& o = out[k];
        res.decisions[r][c] = decide(o.ml_sample_v, res.vref_car_v, comparator_offset(cfg, c));
        res.expected[r][c] = is_diagonal(r, c) ? Decision::Hit : Decision::Miss;
        res.miss_counts[r][c] = o.miss_count_truth;
        res.energy[r][c] = o.energy;
        if (res.decisions[r][c] != res.expected[r][c]) {
            std::ostringstream os;
            os << "cue " << r + 1 << ", data " << c + 1 << ": expected "
               << to_string(res.expected[r][c]) << ", got " << to_string(res.decisions[r][c])
               << " (ml " << o.ml_sample_v << " V, vref " << res.vref_car_v << " V)";
            res.misclassified.push_back(os.str());
        }
    }
    return res;
}

bool is_unimodal(const std::vector<double>& y, double tolerance) {
    if (y.size() < 3) return true;
    const auto peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    double lo = y.front();
    for (std::size_t k = 1; k <= peak; ++k) {
        if (y[k] < lo - tolerance) return false;
        lo = std::max(lo, y[k]);
    }
    double hi = y[peak];
    for (std::size_t k = peak + 1; k < y.size(); ++k) {
        if (y[k] > hi + tolerance) return false;
        hi = std::min(hi, y[k]);
    }
    return true;
}

GapCurve sweep_vsec(const SweepPlan& plan, const CornerModel& corner, const ArrayConfig& cfg,
                    int jobs) {
    GapCurve curve;
    curve.corner = corner.name;
    ArrayConfig base = apply_corner(cfg, corner);
    base.warmup_searches = plan.warmup_searches;
    std::vector<double> gaps;
    for (double v : plan.points()) {
        SweepPoint p;
        p.x = v;
        try {
            ArrayConfig c = base;
            c.cell.supplies.vsec = v;
            const auto g = measure_gap(c, jobs);
            p.gap_v = g.gap_v;
            p.min_hit_v = g.min_hit_v;
            p.max_worst_miss_v = g.max_worst_miss_v;
            gaps.push_back(p.gap_v);
        } catch (const std::exception& e) {
            p.ok = false;
            p.error = e.what();
        }
        curve.points.push_back(p);
    }
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& p : curve.points) {
        if (p.ok && p.gap_v > best) {
            best = p.gap_v;
            curve.argmax = p.x;
        }
    }
    curve.unimodal = is_unimodal(gaps, 1e-4);
    return curve;
}

TimingReport measure_search_timing(const ArrayConfig& cfg) {
    TimingReport t;
    t.threshold_v = 0.1 * cfg.cell.supplies.vsec;
    ArrayConfig c = cfg;
    c.warmup_searches = 0;
    auto delay = [&](char data, char cue) -> std::optional<double> {
        const auto run = run_search_traced(parse_data_word(std::string(c.rows, data), c.rows),
                                           parse_cue_word(std::string(c.rows, cue), c.rows), c);
        const double t_en = run.schedule.marker("enable");
        const auto hit = measure_delay(run.trace, "ml", t.threshold_v, Direction::Falling, t_en);
        if (!hit) return std::nullopt;
        return *hit - t_en;
    };
    t.developing_delay_hrs_s = delay('L', '1');
    t.developing_delay_lrs_s = delay('H', '0');
    const auto s = schedule_car(CueValue::One, cfg.cell);
    t.pre_charge_s = s.marker("enable") - s.marker("pre_charge");
    if (t.developing_delay_hrs_s && t.developing_delay_lrs_s) {
        t.evaluate_s = std::max(*t.developing_delay_hrs_s, *t.developing_delay_lrs_s);
        t.search_delay_s = t.pre_charge_s + *t.evaluate_s;
    }
    return t;
}

EnergyMap energy_map(const Table2Result& suite) {
    EnergyMap m;
    double worst = -1.0, best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            const auto& e = suite.energy[r][c];
            m.per_bit_j[r][c] = e.per_bit_j();
            m.breakdown += e;
            if (m.per_bit_j[r][c] > worst) {
                worst = m.per_bit_j[r][c];
                m.worst = {r, c};
            }
            if (m.per_bit_j[r][c] < best) {
                best = m.per_bit_j[r][c];
                m.best = {r, c};
            }
        }
    }
    m.breakdown.searches = 16;
    m.breakdown.bits = suite.energy[0][0].bits;
    return m;
}

EnergyMap energy_map(const ArrayConfig& cfg, int jobs) {
    return energy_map(run_table2_suite(cfg, true, jobs));
}

std::vector<double> default_esr_grid() {
    std::vector<double> r;
    for (int k = 0; k < 25; ++k) r.push_back(10.0 * std::pow(10.0, 4.0 * k / 24.0));
    return r;
}

Circuit build_write_stack(WriteDirection direction, const CellConfig& cfg, double r_ohms) {
    cfg.validate();
    Circuit c;
    const auto cue = c.add_net("cue", NetRole::cue);
    const auto mid = c.add_net("mid", NetRole::mid);
    const auto psw = c.add_net("psw", NetRole::psw);
    const auto sw = c.add_net("sw", NetRole::sw);
    c.add_resistor(cue, mid, r_ohms, "esr");
    c.add_mosfet(mid, sw, psw, cfg.q1, "q1");
    const double vdd = cfg.supplies.vdd;
    const bool fwd = direction == WriteDirection::Forward;
    c.fix(cue, fwd ? vdd : 0.0);
    c.fix(psw, fwd ? 0.0 : vdd);
    c.fix(sw, vdd);
    return c;
}

std::vector<EsrPoint> write_esr_sweep(WriteDirection direction,
                                      const std::vector<double>& resistances,
                                      const CellConfig& cfg) {
    std::vector<EsrPoint> out;
    for (double r : resistances) {
        EsrPoint p;
        p.r_ohms = r;
        try {
            const Circuit c = build_write_stack(direction, cfg, r);
            const auto dc = dc_operating_point(c, {}, cfg.solver);
            p.v_across_v = std::abs(dc.voltages.at("cue") - dc.voltages.at("mid"));
            p.i_a = p.v_across_v / r;
        } catch (const std::exception& e) {
            p.ok = false;
            p.error = e.what();
        }
        out.push_back(p);
    }
    return out;
}

AarSuiteReport run_aar_suite(const ArrayConfig& cfg, const std::vector<DataWord>& columns) {
    AarSuiteReport rep;
    rep.calibration = check_aar_reference(cfg);
    std::vector<DataWord> cols = columns;
    if (cols.empty()) {
        cols.emplace_back(cfg.rows, ResistiveState::hrs());
        cols.emplace_back(cfg.rows, ResistiveState::lrs());
    }
    for (const auto& col : cols) {
        for (std::size_t k = 0; k < col.size(); ++k) {
            AarReadRecord r;
            r.row = static_cast<int>(k);
            r.stored_one = col[k].rs_ohms >= std::sqrt(kLrsOhms * kHrsOhms);
            const auto read = run_aar_row(col[k], cfg);
            r.bit = read.bit;
            r.psw_sample_v = read.psw_sample_v;
            r.correct = r.bit == (r.stored_one ? 1 : 0);
            if (r.correct) ++rep.n_correct;
            rep.reads.push_back(r);
        }
    }
    return rep;
}

}  // namespace camsim
