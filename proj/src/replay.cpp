#include "trd/replay.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace trd {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t sample_seed)
    : capacity_(capacity), gen_(sample_seed) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    records_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(TransitionRecord record) {
    if (!std::isfinite(record.grouped_reward))
        throw std::invalid_argument("ReplayBuffer: non-finite grouped reward");
    if (records_.size() < capacity_) {
        records_.push_back(std::move(record));
    } else {
        records_[next_] = std::move(record);
        next_ = (next_ + 1) % capacity_;
    }
}

std::vector<const TransitionRecord*> ReplayBuffer::sample(int batch_size) {
    if (records_.empty()) throw std::logic_error("ReplayBuffer: sampling from empty buffer");
    std::uniform_int_distribution<std::size_t> pick(0, records_.size() - 1);
    std::vector<const TransitionRecord*> batch(batch_size);
    for (auto& slot : batch) slot = &records_[pick(gen_)];
    return batch;
}

namespace {
constexpr char kLogMagic[4] = {'T', 'R', 'D', 'B'};
constexpr std::uint32_t kLogVersion = 1;
}  // namespace

void TrajectoryLog::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write trajectory log: " + path.string());
    out.write(kLogMagic, 4);
    auto put_u32 = [&out](std::uint32_t v) {
        char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        out.write(b, 4);
    };
    auto put_f64 = [&out](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
        out.write(b, 8);
    };
    put_u32(kLogVersion);
    put_u32(static_cast<std::uint32_t>(steps_.size()));
    for (const TrajStep& s : steps_) {
        put_u32(s.episode);
        put_u32(static_cast<std::uint32_t>(s.state));
        put_u32(static_cast<std::uint32_t>(s.action));
        put_f64(s.reward);
        put_u32(static_cast<std::uint32_t>(s.next_state));
        out.put(static_cast<char>(s.terminated ? 1 : 0));
        out.put(static_cast<char>(s.truncated ? 1 : 0));
    }
}

TrajectoryLog TrajectoryLog::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read trajectory log: " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kLogMagic, 4) != 0)
        throw std::runtime_error("not a trajectory log (bad magic)");
    auto get_u32 = [&in]() {
        char b[4];
        if (!in.read(b, 4)) throw std::runtime_error("trajectory log truncated");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
        return v;
    };
    auto get_f64 = [&in]() {
        char b[8];
        if (!in.read(b, 8)) throw std::runtime_error("trajectory log truncated");
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i)
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    };
    auto get_u8 = [&in]() {
        char c;
        if (!in.get(c)) throw std::runtime_error("trajectory log truncated");
        return static_cast<unsigned char>(c);
    };
    if (get_u32() != kLogVersion) throw std::runtime_error("unsupported trajectory log version");
    const std::uint32_t count = get_u32();
    TrajectoryLog log;
    for (std::uint32_t i = 0; i < count; ++i) {
        TrajStep s;
        s.episode = get_u32();
        s.state = static_cast<int>(get_u32());
        s.action = static_cast<int>(get_u32());
        s.reward = get_f64();
        s.next_state = static_cast<int>(get_u32());
        s.terminated = get_u8() != 0;
        s.truncated = get_u8() != 0;
        log.push(s);
    }
    return log;
}

NStepAssembler::NStepAssembler(int w, double gamma) : w_(w), gamma_(gamma) {
    if (w < 1) throw std::invalid_argument("NStepAssembler: w must be >= 1");
}

std::vector<TransitionRecord> NStepAssembler::on_step(const Observation& obs, int state,
                                                      int action, double reward,
                                                      const Observation& next_obs,
                                                      int next_state, bool terminated,
                                                      bool truncated) {
    pending_.push_back(Pending{obs, state, action, 0.0, 0});
    for (Pending& p : pending_) {
        p.grouped_reward += std::pow(gamma_, static_cast<double>(p.steps_seen)) * reward;
        ++p.steps_seen;
    }

    std::vector<TransitionRecord> completed;
    auto emit = [&](const Pending& p, bool ended) {
        TransitionRecord rec;
        rec.obs_t = p.obs;
        rec.state_t = p.state;
        rec.action = p.action;
        rec.grouped_reward = p.grouped_reward;
        rec.obs_t_plus_w = next_obs;
        rec.state_t_plus_w = next_state;
        rec.terminated_within_w = ended;
        completed.push_back(std::move(rec));
    };

    if (terminated) {
        for (const Pending& p : pending_) emit(p, true);
        pending_.clear();
    } else {
        while (!pending_.empty() && pending_.front().steps_seen >= w_) {
            emit(pending_.front(), false);
            pending_.pop_front();
        }
        // No observation exists past a truncation point, so records still
        // inside their group cannot be completed.
        if (truncated) pending_.clear();
    }
    return completed;
}

std::vector<TransitionRecord> assemble_records(const TrajectoryLog& log, const MdpSpec& spec,
                                               int w, double gamma) {
    NStepAssembler assembler(w, gamma);
    std::vector<TransitionRecord> records;
    std::uint32_t episode = 0;
    bool first = true;
    for (std::size_t i = 0; i < log.size(); ++i) {
        const TrajStep& s = log[i];
        if (!first && s.episode != episode) assembler.reset();
        episode = s.episode;
        first = false;
        auto out = assembler.on_step(Observation{spec.obs(s.state)}, s.state, s.action,
                                     s.reward, Observation{spec.obs(s.next_state)},
                                     s.next_state, s.terminated, s.truncated);
        for (auto& rec : out) records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace trd
