#include "biofeed/stage/cuts.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "biofeed/config/instance.hpp"

namespace biofeed {

double Cut::evaluate(std::span<const double> state) const {
    double v = intercept;
    for (std::size_t k = 0; k < gradient.size(); ++k) v += gradient[k] * state[k];
    return v;
}

Cut make_cut(double value, std::span<const double> gradient, std::span<const double> trial, int iteration) {
    Cut c;
    c.gradient.assign(gradient.begin(), gradient.end());
    c.intercept = value;
    for (std::size_t k = 0; k < gradient.size(); ++k) c.intercept -= gradient[k] * trial[k];
    c.iteration = iteration;
    return c;
}

CutPool::CutPool(int stages, int states) : states_(states) {
    if (stages < 0 || states < 0) throw std::invalid_argument("cut pool dimensions must be nonnegative");
    for (int t = 0; t < stages; ++t) stages_.push_back(std::make_unique<Stage>());
}

CutPool::CutPool(const CutPool& other) : states_(other.states_) {
    for (int t = 0; t < other.num_stages(); ++t) {
        stages_.push_back(std::make_unique<Stage>());
        stages_.back()->cuts = other.snapshot(t);
    }
}

CutPool& CutPool::operator=(const CutPool& other) {
    if (this != &other) {
        CutPool copy(other);
        stages_ = std::move(copy.stages_);
        states_ = copy.states_;
    }
    return *this;
}

const std::unique_ptr<CutPool::Stage>& CutPool::at(int stage) const {
    if (stage < 0 || stage >= num_stages()) throw std::out_of_range("cut pool stage " + std::to_string(stage));
    return stages_[static_cast<std::size_t>(stage)];
}

std::size_t CutPool::size(int stage) const {
    const auto& s = at(stage);
    std::shared_lock lock(s->mutex);
    return s->cuts.size();
}

std::size_t CutPool::total_size() const {
    std::size_t n = 0;
    for (int t = 0; t < num_stages(); ++t) n += size(t);
    return n;
}

void CutPool::append(int stage, Cut cut) {
    if (static_cast<int>(cut.gradient.size()) != states_) {
        throw std::invalid_argument("cut gradient has " + std::to_string(cut.gradient.size()) + " entries, expected " +
                                    std::to_string(states_));
    }
    bool finite = std::isfinite(cut.intercept);
    for (double g : cut.gradient) finite = finite && std::isfinite(g);
    if (!finite) throw std::invalid_argument("cut has non-finite coefficients");
    const auto& s = at(stage);
    std::unique_lock lock(s->mutex);
    s->cuts.push_back(std::move(cut));
}

std::vector<Cut> CutPool::snapshot(int stage) const {
    return read(stage, [](std::span<const Cut> cuts) { return std::vector<Cut>(cuts.begin(), cuts.end()); });
}

double CutPool::evaluate(int stage, std::span<const double> state) const {
    return read(stage, [&](std::span<const Cut> cuts) {
        double best = 0.0;
        for (const auto& c : cuts) best = std::max(best, c.evaluate(state));
        return best;
    });
}

bool operator==(const CutPool& a, const CutPool& b) {
    if (a.num_stages() != b.num_stages() || a.states_ != b.states_) return false;
    for (int t = 0; t < a.num_stages(); ++t) {
        if (a.snapshot(t) != b.snapshot(t)) return false;
    }
    return true;
}

void write_cuts(const CutPool& pool, std::ostream& out) {
    out << "biofeed-cuts 1\n";
    out << "stages " << pool.num_stages() << " states " << pool.num_states() << "\n";
    for (int t = 0; t < pool.num_stages(); ++t) {
        pool.read(t, [&](std::span<const Cut> cuts) {
            for (const auto& c : cuts) {
                out << t << ' ' << c.iteration << ' ' << format_double(c.intercept);
                for (double g : c.gradient) out << ' ' << format_double(g);
                out << '\n';
            }
        });
    }
}

namespace {

double parse_number(const std::string& tok, int line) {
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
        throw std::runtime_error("cut file line " + std::to_string(line) + ": bad number '" + tok + "'");
    }
    return v;
}

}  // namespace

CutPool read_cuts(std::istream& in) {
    std::string line;
    int lineno = 0;
    auto next = [&]() -> bool {
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line[0] != '#') return true;
        }
        return false;
    };
    if (!next() || line != "biofeed-cuts 1") {
        throw std::runtime_error("cut file line " + std::to_string(lineno) + ": expected header 'biofeed-cuts 1'");
    }
    if (!next()) throw std::runtime_error("cut file: missing dimensions line");
    std::istringstream dims(line);
    std::string w1, w2;
    int stages = -1, states = -1;
    if (!(dims >> w1 >> stages >> w2 >> states) || w1 != "stages" || w2 != "states" || stages < 0 || states < 0) {
        throw std::runtime_error("cut file line " + std::to_string(lineno) + ": expected 'stages <T> states <n>'");
    }
    CutPool pool(stages, states);
    while (next()) {
        std::istringstream ls(line);
        int stage = -1, iteration = 0;
        std::string tok;
        if (!(ls >> stage >> iteration) || stage < 0 || stage >= stages) {
            throw std::runtime_error("cut file line " + std::to_string(lineno) + ": bad stage or iteration");
        }
        Cut c;
        c.iteration = iteration;
        if (!(ls >> tok)) throw std::runtime_error("cut file line " + std::to_string(lineno) + ": missing intercept");
        c.intercept = parse_number(tok, lineno);
        while (ls >> tok) c.gradient.push_back(parse_number(tok, lineno));
        if (static_cast<int>(c.gradient.size()) != states) {
            throw std::runtime_error("cut file line " + std::to_string(lineno) + ": expected " +
                                     std::to_string(states) + " gradient entries");
        }
        pool.append(stage, std::move(c));
    }
    return pool;
}

}  // namespace biofeed
