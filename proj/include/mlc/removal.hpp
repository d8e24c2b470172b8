#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mlc/contour.hpp"
#include "mlc/error.hpp"
#include "mlc/geometry.hpp"
#include "mlc/obstacles.hpp"
#include "mlc/philox.hpp"
#include "mlc/spatial_hash.hpp"
#include "mlc/walk.hpp"

namespace mlc {

// Remove, in interval k, the length formed in interval k - window.
struct FullWindow {};
// Remove, in interval k, psi times the length formed in interval k.
struct Fraction {
    double psi = 0.5;
};

struct FixedStart {
    std::uint64_t interval = 1;
};
struct RandomStart {
    std::uint64_t lo = 1;
    std::uint64_t hi = 1;
};

struct RemovalConfig {
    std::uint64_t window = 1;
    std::variant<FixedStart, RandomStart> start = FixedStart{1};
    std::variant<FullWindow, Fraction> mode = FullWindow{};
    double eps_share = 1e-9;

    void validate() const {
        if (window == 0) throw Error(ErrorCode::ConfigInvalid, "removal.window must be positive");
        if (const auto* f = std::get_if<Fraction>(&mode)) {
            if (!(f->psi > 0.0 && f->psi < 1.0)) throw Error(ErrorCode::ConfigInvalid, "removal.psi must lie in (0,1)");
        }
        if (const auto* r = std::get_if<RandomStart>(&start)) {
            if (r->hi < r->lo) throw Error(ErrorCode::ConfigInvalid, "removal.start range is empty");
        }
        if (!(eps_share > 0.0)) throw Error(ErrorCode::ConfigInvalid, "removal.eps_share must be > 0");
    }

    std::uint64_t resolve_start(std::uint64_t seed, WalkerId walker) const {
        if (const auto* f = std::get_if<FixedStart>(&start)) return f->interval;
        const auto& r = std::get<RandomStart>(start);
        Substream rng(seed, (std::uint64_t{1} << 40) | walker, 0);
        const std::uint64_t span = r.hi - r.lo + 1;
        return r.lo + std::min(span - 1, static_cast<std::uint64_t>(rng.uniform() * static_cast<double>(span)));
    }
};

// Sorted, disjoint sub-intervals of [0, 1].
class IntervalSet {
  public:
    void add(double lo, double hi) {
        if (!(hi > lo)) return;
        std::vector<std::pair<double, double>> out;
        for (const auto& s : spans_) {
            if (s.second < lo || s.first > hi) {
                out.push_back(s);
            } else {
                lo = std::min(lo, s.first);
                hi = std::max(hi, s.second);
            }
        }
        out.emplace_back(lo, hi);
        std::sort(out.begin(), out.end());
        spans_ = std::move(out);
    }

    double measure() const noexcept {
        double m = 0;
        for (const auto& s : spans_) m += s.second - s.first;
        return m;
    }

    bool full() const noexcept { return spans_.size() == 1 && spans_[0].first <= 0.0 && spans_[0].second >= 1.0; }

    std::vector<std::pair<double, double>> gaps() const {
        std::vector<std::pair<double, double>> g;
        double at = 0.0;
        for (const auto& s : spans_) {
            if (s.first > at) g.emplace_back(at, s.first);
            at = std::max(at, s.second);
        }
        if (at < 1.0) g.emplace_back(at, 1.0);
        return g;
    }

    bool contains(double u) const noexcept {
        for (const auto& s : spans_) {
            if (u >= s.first && u <= s.second) return true;
        }
        return false;
    }

    const std::vector<std::pair<double, double>>& spans() const noexcept { return spans_; }

  private:
    std::vector<std::pair<double, double>> spans_;
};

enum class Side { Unassigned, InPlane, Above, Below };

constexpr const char* to_string(Side s) noexcept {
    switch (s) {
        case Side::Unassigned: return "unassigned";
        case Side::InPlane: return "in_plane";
        case Side::Above: return "above";
        case Side::Below: return "below";
    }
    return "unknown";
}

struct SegmentRecord {
    std::uint64_t formed_interval = 0;
    PlaneId plane;
    Vec3 ga;
    Vec3 gb;
    Complex la;
    Complex lb;
    double length = 0.0;
    IntervalSet removed;
    std::optional<std::size_t> group;
    Side side = Side::Unassigned;

    double unremoved() const { return length * (1.0 - removed.measure()); }
};

// One row of the per-interval metrics table.
struct IntervalRecord {
    std::uint64_t interval = 0;
    WalkerId walker = 0;
    double f_rate = 0.0;
    double r_rate = 0.0;
    double db = 0.0;
    double backlog = 0.0;
    double phi = 0.0;   // pure removal
    double phi3 = 0.0;  // shared removal as first owner
    double phi4 = 0.0;  // shared removal as a later owner
    WalkerStatus status = WalkerStatus::Active;
};

using MeasureLog = std::vector<IntervalRecord>;

struct HalfMeasures {
    double above = 0.0;
    double below = 0.0;
};

struct PartitionReport {
    PlaneId plane;
    std::uint64_t interval = 0;
    double offset = 0.0;
    std::size_t total = 0;
    std::size_t in_plane = 0;
    std::size_t above = 0;
    std::size_t below = 0;
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    double psi = 0.0;
    std::map<WalkerId, Side> classes;
    std::map<WalkerId, RegionLengths> lengths;
    std::map<WalkerId, double> full_length;
    std::map<WalkerId, double> tail_rate;
    HalfMeasures at_event;

    // Survivors split exactly into the above and below classes.
    bool count_identity_holds() const noexcept {
        return in_plane + above + below == total && above + below == total - in_plane;
    }
};

enum class Placement { BothAbove, Split, BothBelow, SplitReversed };

struct PdeStepResult {
    Placement placement = Placement::BothAbove;
    HalfMeasures before;
    HalfMeasures after;
    double contribution_a = 0.0;
    double contribution_b = 0.0;
    double mixed_a = 0.0;  // per-walker, per-interval change of the half measure holding A's tail
    double mixed_b = 0.0;
};

struct FourPartRates {
    std::uint64_t interval = 0;
    double phi = 0.0;
    double phi_prime = 0.0;
    double phi3 = 0.0;
    double phi4 = 0.0;
};

class RemovalLedger {
  public:
    explicit RemovalLedger(RemovalConfig cfg = {}) : cfg_(cfg), share_index_(std::max(cfg.eps_share * 4.0, 1e-12)) {
        cfg_.validate();
    }

    const RemovalConfig& config() const noexcept { return cfg_; }

    void add_walker(WalkerId id, std::uint64_t start_interval) {
        if (books_.count(id)) throw Error(ErrorCode::InvalidArgument, "walker already registered");
        Book b;
        b.start = start_interval;
        books_.emplace(id, std::move(b));
    }

    bool has_walker(WalkerId id) const noexcept { return books_.count(id) != 0; }

    std::vector<WalkerId> walkers() const {
        std::vector<WalkerId> out;
        for (const auto& [id, b] : books_) out.push_back(id);
        return out;
    }

    void begin_interval(std::uint64_t k) {
        if (open_) throw Error(ErrorCode::InvalidArgument, "interval already open");
        if (k != next_interval_) throw Error(ErrorCode::InvalidArgument, "intervals must be consecutive");
        open_ = true;
        for (auto& [id, b] : books_) b.acc = {};
    }

    // Registers segments formed since the last call; their length counts as this interval's formation.
    void record_formation(WalkerId id, const Contour& c) {
        Book& b = book(id);
        require_open();
        while (b.segments.size() + 1 < c.size()) {
            const std::size_t i = b.segments.size();
            const auto& p = c.vertices[i].point;
            const auto& q = c.vertices[i + 1].point;
            SegmentRecord s;
            s.formed_interval = next_interval_;
            s.plane = p.plane;
            s.ga = p.global;
            s.gb = q.global;
            s.la = p.local;
            s.lb = q.local;
            s.length = distance(p.global, q.global);
            if (partition_) s.side = side_of(p.global);
            b.segments.push_back(s);
            b.acc.f_rate += s.length;
            b.formed += s.length;
            register_shared(id, i);
        }
        if (b.formed_at.size() <= next_interval_) b.formed_at.resize(next_interval_ + 1, 0.0);
        b.formed_at[next_interval_] = b.acc.f_rate;
    }

    // Scheduled removal amount for walker `id` in interval k.
    double plan_interval(WalkerId id, std::uint64_t k) const {
        const Book& b = book(id);
        if (k < b.start) return 0.0;
        double raw = 0.0;
        if (std::holds_alternative<FullWindow>(cfg_.mode)) {
            if (k >= cfg_.window) raw = formed_at(b, k - cfg_.window);
        } else {
            raw = std::get<Fraction>(cfg_.mode).psi * formed_at(b, k);
        }
        return std::min(raw, std::max(0.0, b.formed - b.removed));
    }

    // FIFO removal from the walker's origin. Returns the pieces removed.
    std::vector<RemovedSegment> apply_removal(WalkerId id, double amount) {
        if (!(amount >= 0.0)) throw Error(ErrorCode::InvalidArgument, "removal amount must be >= 0");
        Book& b = book(id);
        const double available = std::max(0.0, b.formed - b.removed);
        if (amount > available) {
            b.clipped += amount - available;
            amount = available;
        }
        require_open();
        b.planned += amount;
        auto pieces = remove_fifo(id, amount, [](const SegmentRecord&) { return true; }, true);
        for (const auto& p : pieces) b.applied += p.length();
        return pieces;
    }

    // Closes interval k and appends one record per walker.
    void close_interval(std::uint64_t k, const std::map<WalkerId, WalkerStatus>& status = {}) {
        require_open();
        if (k != next_interval_) throw Error(ErrorCode::InvalidArgument, "closing the wrong interval");
        double formed_total = 0.0;
        for (auto& [id, b] : books_) {
            IntervalRecord r;
            r.interval = k;
            r.walker = id;
            r.f_rate = b.acc.f_rate;
            r.r_rate = b.acc.r_rate;
            r.db = r.f_rate - r.r_rate;
            r.backlog = b.formed - b.removed;
            r.phi = b.acc.phi;
            r.phi3 = b.acc.phi3;
            r.phi4 = b.acc.phi4;
            auto it = status.find(id);
            r.status = it == status.end() ? WalkerStatus::Active : it->second;
            b.log.push_back(r);
            formed_total += b.formed;
        }
        cumulative_formed_.push_back(formed_total);
        cumulative_removed_.push_back(distinct_removed_);
        open_ = false;
        ++next_interval_;
    }

    const MeasureLog& measure_log(WalkerId id) const { return book(id).log; }
    const IntervalRecord& measure_step(WalkerId id, std::uint64_t k) const {
        const auto& log = book(id).log;
        if (k >= log.size()) throw Error(ErrorCode::IndexOutOfRange, "interval not closed");
        return log[k];
    }

    double formed(WalkerId id) const { return book(id).formed; }
    double removed(WalkerId id) const { return book(id).removed; }
    double backlog(WalkerId id) const { return book(id).formed - book(id).removed; }
    double planned_total(WalkerId id) const { return book(id).planned; }
    double applied_total(WalkerId id) const { return book(id).applied; }
    double clipped_total(WalkerId id) const { return book(id).clipped; }
    std::uint64_t start_interval(WalkerId id) const { return book(id).start; }
    const std::vector<SegmentRecord>& segments(WalkerId id) const { return book(id).segments; }

    // Total removed point set length, each shared piece counted once.
    double distinct_removed() const noexcept { return distinct_removed_; }
    std::uint64_t closed_intervals() const noexcept { return next_interval_; }
    const std::vector<double>& cumulative_formed() const noexcept { return cumulative_formed_; }
    const std::vector<double>& cumulative_removed() const noexcept { return cumulative_removed_; }

    std::span<const RemovedSegment> removed_pieces() const noexcept { return pieces_; }
    const std::set<PlaneId>& hole_planes() const noexcept { return hole_planes_; }

    // Frozen view for the next stepping phase.
    Obstacles obstacles() const { return {std::span<const RemovedSegment>(pieces_), hole_planes_, &grid_}; }

    std::size_t shared_groups() const noexcept { return groups_.size(); }

    std::vector<FourPartRates> shared_segment_rates(WalkerId a, WalkerId b) const {
        if (a == b) throw Error(ErrorCode::InvalidArgument, "need two distinct walkers");
        const auto& la = book(a).log;
        const auto& lb = book(b).log;
        std::vector<FourPartRates> out;
        for (std::size_t k = 0; k < std::min(la.size(), lb.size()); ++k) {
            out.push_back({k, la[k].phi, lb[k].phi, la[k].phi3 + lb[k].phi3, la[k].phi4 + lb[k].phi4});
        }
        return out;
    }

    void mark_hole_plane(PlaneId id) { hole_planes_.insert(id); }

    // Partition bookkeeping set up by plane_hole_event.
    bool partitioned() const noexcept { return partition_.has_value(); }
    const PartitionReport& partition() const {
        if (!partition_) throw Error(ErrorCode::NotPartitioned, "no plane-hole event has fired");
        return *partition_;
    }

    HalfMeasures half_measures() const {
        HalfMeasures h;
        for (const auto& [id, b] : books_) {
            for (const auto& s : b.segments) {
                if (s.side == Side::Above) h.above += s.unremoved();
                if (s.side == Side::Below) h.below += s.unremoved();
            }
        }
        return h;
    }

    // Unremoved length of walker id on one side.
    double side_backlog(WalkerId id, Side side) const {
        double t = 0;
        for (const auto& s : book(id).segments) {
            if (s.side == side) t += s.unremoved();
        }
        return t;
    }

    // One interval of tail removal for a surviving walker. Returns the length removed.
    double apply_tail_step(WalkerId id) {
        if (!partition_) throw Error(ErrorCode::NotPartitioned, "tail removal before the plane-hole event");
        require_open();
        auto it = partition_->tail_rate.find(id);
        if (it == partition_->tail_rate.end()) return 0.0;
        const Side cls = partition_->classes.at(id);
        const Side tail = cls == Side::Above ? Side::Below : Side::Above;
        const double amount = std::min(it->second, side_backlog(id, tail));
        if (amount <= 0.0) return 0.0;
        auto pieces = remove_fifo(id, amount, [tail](const SegmentRecord& s) { return s.side == tail; });
        double got = 0;
        for (const auto& p : pieces) got += p.length();
        return got;
    }

    // Used by plane_hole_event; see there.
    void install_partition(PartitionReport report) {
        partition_ = std::move(report);
        for (auto& [id, b] : books_) {
            for (auto& s : b.segments) s.side = side_of(s.ga);
        }
    }

    // Marks everything on the hole plane removed and books it as pure removal now.
    double lose_in_plane(WalkerId id) {
        require_open();
        auto pieces = remove_fifo(id, std::numeric_limits<double>::infinity(),
                                  [](const SegmentRecord& s) { return s.side == Side::InPlane; });
        double got = 0;
        for (const auto& p : pieces) got += p.length();
        book(id).hole_lost += got;
        return got;
    }

    double hole_lost(WalkerId id) const { return book(id).hole_lost; }

  private:
    struct Accumulator {
        double f_rate = 0.0;
        double r_rate = 0.0;
        double phi = 0.0;
        double phi3 = 0.0;
        double phi4 = 0.0;
    };

    struct Book {
        std::uint64_t start = 0;
        std::vector<SegmentRecord> segments;
        std::vector<double> formed_at;
        std::size_t fifo = 0;
        double formed = 0.0;
        double removed = 0.0;
        double planned = 0.0;
        double applied = 0.0;
        double clipped = 0.0;
        double hole_lost = 0.0;
        Accumulator acc;
        MeasureLog log;
    };

    struct Member {
        WalkerId walker;
        std::size_t segment;
        bool reversed;
    };

    struct Group {
        std::vector<Member> members;
    };

    Book& book(WalkerId id) {
        auto it = books_.find(id);
        if (it == books_.end()) throw Error(ErrorCode::InvalidArgument, "unknown walker " + std::to_string(id));
        return it->second;
    }
    const Book& book(WalkerId id) const {
        auto it = books_.find(id);
        if (it == books_.end()) throw Error(ErrorCode::InvalidArgument, "unknown walker " + std::to_string(id));
        return it->second;
    }

    void require_open() const {
        if (!open_) throw Error(ErrorCode::InvalidArgument, "no interval is open");
    }

    static double formed_at(const Book& b, std::uint64_t k) { return k < b.formed_at.size() ? b.formed_at[k] : 0.0; }

    Side side_of(Vec3 p) const {
        const double d = dot(p, partition_axis_) - partition_->offset;
        if (std::abs(d) <= kPlaneTolerance) return Side::InPlane;
        return d > 0 ? Side::Above : Side::Below;
    }

    static std::uint64_t pack(WalkerId w, std::size_t seg) { return (std::uint64_t{w} << 40) | seg; }

    void register_shared(WalkerId id, std::size_t idx) {
        const SegmentRecord& s = books_.at(id).segments[idx];
        const Vec3 mid = 0.5 * (s.ga + s.gb);
        const double eps = cfg_.eps_share;
        std::optional<Member> match;
        share_index_.any_within(mid, 2.0 * eps, [&](Vec3, std::size_t tag) {
            const auto w = static_cast<WalkerId>(tag >> 40);
            const std::size_t j = tag & ((std::uint64_t{1} << 40) - 1);
            if (w == id) return false;
            const SegmentRecord& o = books_.at(w).segments[j];
            if (distance(o.ga, s.ga) < eps && distance(o.gb, s.gb) < eps) {
                match = Member{w, j, false};
            } else if (distance(o.ga, s.gb) < eps && distance(o.gb, s.ga) < eps) {
                match = Member{w, j, true};
            }
            return match.has_value();
        });
        share_index_.insert(mid, pack(id, idx));
        if (!match) return;
        SegmentRecord& other = books_.at(match->walker).segments[match->segment];
        std::size_t g;
        bool reversed = match->reversed;
        if (other.group) {
            g = *other.group;
            // Orientation relative to the group's first member.
            for (const auto& m : groups_[g].members) {
                if (m.walker == match->walker && m.segment == match->segment) reversed = reversed != m.reversed;
            }
        } else {
            g = groups_.size();
            groups_.push_back({{Member{match->walker, match->segment, false}}});
            other.group = g;
        }
        groups_[g].members.push_back({id, idx, reversed});
        SegmentRecord& mine = books_.at(id).segments[idx];
        mine.group = g;
        // Inherit whatever the group already lost.
        const SegmentRecord& lead =
            books_.at(groups_[g].members[0].walker).segments[groups_[g].members[0].segment];
        for (const auto& [lo, hi] : lead.removed.spans()) {
            const double a = reversed ? 1.0 - hi : lo;
            const double b = reversed ? 1.0 - lo : hi;
            const double before = mine.removed.measure();
            mine.removed.add(a, b);
            const double got = (mine.removed.measure() - before) * mine.length;
            books_.at(id).removed += got;
            books_.at(id).acc.r_rate += got;
        }
    }

    // Marks [u0, u1] of one segment removed for every owner; books it to the remover.
    RemovedSegment take(WalkerId remover, std::size_t idx, double u0, double u1, double amount) {
        Book& rb = books_.at(remover);
        SegmentRecord& s = rb.segments[idx];
        RemovedSegment piece;
        piece.plane = s.plane;
        piece.a = s.la + u0 * (s.lb - s.la);
        piece.b = s.la + u1 * (s.lb - s.la);
        piece.ga = s.ga + u0 * (s.gb - s.ga);
        piece.gb = s.ga + u1 * (s.gb - s.ga);
        piece.owner = remover;
        piece.interval = next_interval_;
        piece.segment = idx;
        if (s.group) {
            const Group& g = groups_[*s.group];
            bool my_rev = false;
            for (const auto& m : g.members) {
                if (m.walker == remover && m.segment == idx) my_rev = m.reversed;
            }
            const bool first = g.members[0].walker == remover;
            (first ? rb.acc.phi3 : rb.acc.phi4) += amount;
            for (const auto& m : g.members) {
                SegmentRecord& t = books_.at(m.walker).segments[m.segment];
                const bool flip = m.reversed != my_rev;
                const double a = flip ? 1.0 - u1 : u0;
                const double b = flip ? 1.0 - u0 : u1;
                const double before = t.removed.measure();
                t.removed.add(a, b);
                const double got = m.walker == remover && m.segment == idx
                                       ? amount
                                       : (t.removed.measure() - before) * t.length;
                books_.at(m.walker).removed += got;
                books_.at(m.walker).acc.r_rate += got;
            }
        } else {
            rb.acc.phi += amount;
            s.removed.add(u0, u1);
            rb.removed += amount;
            rb.acc.r_rate += amount;
        }
        distinct_removed_ += amount;
        grid_.insert(piece, pieces_.size());
        pieces_.push_back(piece);
        return piece;
    }

    // Walks segments oldest first. With use_cursor the scan starts after the fully
    // removed prefix, which is only valid when `keep` accepts every segment.
    template <class Filter>
    std::vector<RemovedSegment> remove_fifo(WalkerId id, double amount, Filter&& keep, bool use_cursor = false) {
        std::vector<RemovedSegment> out;
        Book& b = books_.at(id);
        double remaining = amount;
        constexpr double sliver = 1e-13;
        for (std::size_t idx = use_cursor ? b.fifo : 0; idx < b.segments.size() && remaining > 0.0; ++idx) {
            SegmentRecord& s = b.segments[idx];
            if (s.removed.full() || s.length == 0.0 || !keep(s)) continue;
            for (const auto& [g0, g1] : s.removed.gaps()) {
                if (remaining <= 0.0) break;
                const double gap_len = (g1 - g0) * s.length;
                if (gap_len <= 0.0) continue;
                if (remaining >= gap_len - sliver) {
                    out.push_back(take(id, idx, g0, g1, gap_len));
                    remaining -= gap_len;
                } else {
                    const double u1 = g0 + remaining / s.length;
                    out.push_back(take(id, idx, g0, u1, remaining));
                    remaining = 0.0;
                }
            }
        }
        while (b.fifo < b.segments.size() && (b.segments[b.fifo].removed.full() || b.segments[b.fifo].length == 0.0)) {
            ++b.fifo;
        }
        return out;
    }

    RemovalConfig cfg_;
    std::map<WalkerId, Book> books_;
    std::vector<Group> groups_;
    SpatialHash share_index_;
    std::vector<RemovedSegment> pieces_;
    SegmentGrid grid_;
    std::set<PlaneId> hole_planes_;
    std::vector<double> cumulative_formed_;
    std::vector<double> cumulative_removed_;
    double distinct_removed_ = 0.0;
    std::uint64_t next_interval_ = 0;
    bool open_ = false;
    std::optional<PartitionReport> partition_;
    Vec3 partition_axis_ = kAxisX;

    friend PartitionReport plane_hole_event(const Bundle&, PlaneId, std::span<WalkerState* const>, RemovalLedger&,
                                            double);
};

struct StabilityReport {
    std::size_t windows_checked = 0;
    std::vector<std::uint64_t> window_violations;  // window starts with formation but all dB = 0
    std::vector<std::uint64_t> follow_violations;  // dB = 0 intervals not followed by dB != 0 in time
    bool ok() const noexcept { return window_violations.empty() && follow_violations.empty(); }
};

// Checks that the backlog never settles while the walker keeps forming contour.
// Only the walker's active prefix is inspected.
inline StabilityReport stability_monitor(const MeasureLog& log, std::uint64_t window) {
    if (window == 0) throw Error(ErrorCode::InvalidArgument, "window must be positive");
    StabilityReport rep;
    std::size_t n = 0;
    while (n < log.size() && log[n].status == WalkerStatus::Active) ++n;
    for (std::size_t s = 0; s + window <= n; ++s) {
        bool formed = false;
        bool moved = false;
        for (std::size_t k = s; k < s + window; ++k) {
            formed = formed || log[k].f_rate > 0.0;
            moved = moved || log[k].db != 0.0;
        }
        ++rep.windows_checked;
        if (formed && !moved) rep.window_violations.push_back(log[s].interval);
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (log[k].db != 0.0) continue;
        bool formation_continues = true;
        bool resolved = false;
        for (std::size_t j = k + 1; j < n && j <= k + window; ++j) {
            if (log[j].f_rate <= 0.0) formation_continues = false;
            if (log[j].db != 0.0) {
                resolved = true;
                break;
            }
        }
        const bool horizon_cut = k + window >= n;
        if (!resolved && formation_continues && !horizon_cut) rep.follow_violations.push_back(log[k].interval);
    }
    return rep;
}

// The plane becomes a hole: walkers on it halt, survivors split by side, in-plane
// data is lost, and each survivor's opposite-side tail is scheduled for removal at
// psi times its length per interval.
inline PartitionReport plane_hole_event(const Bundle& bundle, PlaneId plane, std::span<WalkerState* const> walkers,
                                        RemovalLedger& ledger, double psi) {
    if (!bundle.contains(plane)) throw Error(ErrorCode::UnknownPlane, "hole plane " + std::to_string(plane.value));
    if (!bundle.plane(plane).is_parallel()) throw Error(ErrorCode::InvalidArgument, "hole plane must be parallel");
    if (!(psi > 0.0 && psi <= 1.0)) throw Error(ErrorCode::InvalidArgument, "tail psi must lie in (0,1]");
    if (ledger.partition_) throw Error(ErrorCode::InvalidArgument, "plane-hole event already fired");
    ledger.require_open();
    PartitionReport rep;
    rep.plane = plane;
    rep.offset = bundle.offset(plane);
    rep.interval = ledger.closed_intervals();
    rep.psi = psi;
    rep.total = walkers.size();
    ledger.partition_axis_ = bundle.axis();
    for (WalkerState* w : walkers) {
        const double d = bundle.axial(w->current.global) - rep.offset;
        Side cls;
        if (w->current.plane == plane || std::abs(d) <= kPlaneTolerance) {
            cls = Side::InPlane;
            ++rep.in_plane;
            w->status = WalkerStatus::HaltedPlaneHole;
        } else if (d > 0) {
            cls = Side::Above;
            ++rep.above;
        } else {
            cls = Side::Below;
            ++rep.below;
        }
        rep.classes[w->id] = cls;
        rep.lengths[w->id] = side_decomposition(w->contour, bundle, rep.offset);
        rep.full_length[w->id] = polyline_length(w->contour);
    }
    const std::size_t survivors = rep.above + rep.below;
    rep.alpha1 = rep.total == 0 ? 0.0 : static_cast<double>(rep.in_plane) / static_cast<double>(rep.total);
    rep.alpha2 = survivors == 0 ? 0.0 : static_cast<double>(rep.above) / static_cast<double>(survivors);
    ledger.install_partition(rep);
    ledger.mark_hole_plane(plane);
    for (WalkerState* w : walkers) {
        if (ledger.has_walker(w->id)) ledger.lose_in_plane(w->id);
    }
    for (WalkerState* w : walkers) {
        const Side cls = rep.classes[w->id];
        if (cls == Side::InPlane || !ledger.has_walker(w->id)) continue;
        const Side tail = cls == Side::Above ? Side::Below : Side::Above;
        rep.tail_rate[w->id] = psi * ledger.side_backlog(w->id, tail);
    }
    rep.at_event = ledger.half_measures();
    ledger.partition_ = rep;
    return rep;
}

// One interval of the coupled two-walker half-bundle update.
inline PdeStepResult pde_grid_step(RemovalLedger& ledger, WalkerId a, WalkerId b, Placement placement) {
    if (!ledger.partitioned()) throw Error(ErrorCode::NotPartitioned, "pde_grid_step before the plane-hole event");
    const auto& rep = ledger.partition();
    const Side ca = rep.classes.count(a) ? rep.classes.at(a) : Side::Unassigned;
    const Side cb = rep.classes.count(b) ? rep.classes.at(b) : Side::Unassigned;
    Side want_a = Side::Above;
    Side want_b = Side::Above;
    switch (placement) {
        case Placement::BothAbove: break;
        case Placement::Split: want_b = Side::Below; break;
        case Placement::BothBelow: want_a = want_b = Side::Below; break;
        case Placement::SplitReversed: want_a = Side::Below; break;
    }
    if (ca != want_a || cb != want_b) throw Error(ErrorCode::PlacementMismatch, "walkers are not placed as requested");
    PdeStepResult r;
    r.placement = placement;
    r.before = ledger.half_measures();
    r.contribution_a = ledger.apply_tail_step(a);
    r.contribution_b = ledger.apply_tail_step(b);
    r.after = ledger.half_measures();
    r.mixed_a = -r.contribution_a;
    r.mixed_b = -r.contribution_b;
    return r;
}

}  // namespace mlc
