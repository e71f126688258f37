#include "hydrosense/checkpoint.hpp"

#include <map>
#include <sstream>

namespace hydrosense {

namespace {

std::string num(double v) { return format_double(v); }

class LineReader {
public:
    LineReader(std::string_view text, std::string origin) : text_(text), origin_(std::move(origin)) {}

    /// Next non-empty line split on spaces; empty vector at end of input.
    std::vector<std::string> next() {
        while (pos_ < text_.size()) {
            auto end = text_.find('\n', pos_);
            if (end == std::string_view::npos) end = text_.size();
            std::string_view line = text_.substr(pos_, end - pos_);
            pos_ = end + 1;
            ++line_;
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (line.empty()) continue;
            return split(line, ' ');
        }
        return {};
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw LoadError(origin_ + ":" + std::to_string(line_) + ": " + what);
    }

    double number(const std::string& s) const {
        const auto v = parse_double(s);
        if (!v) fail("invalid number '" + s + "'");
        return *v;
    }

    std::size_t count(const std::string& s) const {
        const auto v = parse_double(s);
        if (!v || *v < 0 || *v != static_cast<double>(static_cast<std::size_t>(*v)))
            fail("invalid count '" + s + "'");
        return static_cast<std::size_t>(*v);
    }

    std::vector<std::string> expect(std::string_view tag, std::size_t fields) {
        auto f = next();
        if (f.empty()) fail("unexpected end of file, expected '" + std::string(tag) + "'");
        if (f[0] != tag || f.size() != fields)
            fail("expected '" + std::string(tag) + "' record with " + std::to_string(fields) +
                 " fields");
        return f;
    }

private:
    std::string_view text_;
    std::string origin_;
    std::size_t pos_ = 0;
    std::size_t line_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
    const auto& p = ckpt.params;
    p.validate();
    if (ckpt.catalog.size() != p.n_static)
        throw ContractViolation("checkpoint: catalog size != n_static");
    const auto& s = ckpt.standardizer;
    if (s.statics.size() != p.n_static || s.dynamic.size() != p.n_dynamic ||
        s.dynamic_names.size() != p.n_dynamic)
        throw ContractViolation("checkpoint: standardizer shape != params");

    std::ostringstream out;
    out << "hydrosense-checkpoint " << kCheckpointVersion << "\n";
    out << "shape " << p.hidden << " " << p.n_static << " " << p.n_dynamic << " " << ckpt.lookback
        << "\n";
    for (std::size_t k = 0; k < ckpt.catalog.size(); ++k)
        out << "static " << k << " " << ckpt.catalog[k].name << " "
            << group_name(ckpt.catalog[k].group) << "\n";
    for (std::size_t k = 0; k < s.dynamic_names.size(); ++k)
        out << "dynamic " << k << " " << s.dynamic_names[k] << "\n";
    for (std::size_t k = 0; k < s.statics.size(); ++k)
        out << "stats static " << k << " " << num(s.statics[k].mean) << " " << num(s.statics[k].std)
            << "\n";
    for (std::size_t k = 0; k < s.dynamic.size(); ++k)
        out << "stats dynamic " << k << " " << num(s.dynamic[k].mean) << " "
            << num(s.dynamic[k].std) << "\n";
    out << "stats discharge " << num(s.discharge.mean) << " " << num(s.discharge.std) << "\n";
    p.for_each([&](std::string_view name, std::span<const double> t) {
        out << "tensor " << name << " " << t.size();
        for (double v : t) out << " " << num(v);
        out << "\n";
    });
    out << "end\n";
    return out.str();
}

Checkpoint parse_checkpoint(std::string_view text, const std::string& origin) {
    LineReader in(text, origin);
    auto head = in.expect("hydrosense-checkpoint", 2);
    if (head[1] != std::to_string(kCheckpointVersion))
        in.fail("unsupported checkpoint version '" + head[1] + "'");

    auto shape = in.expect("shape", 5);
    const std::size_t H = in.count(shape[1]), ns = in.count(shape[2]), nd = in.count(shape[3]);
    Checkpoint ck;
    ck.lookback = in.count(shape[4]);
    if (H == 0) in.fail("hidden size must be positive");
    ck.params = ealstm::Params::zeros(H, ns, nd);

    std::vector<Feature> features;
    for (std::size_t k = 0; k < ns; ++k) {
        auto f = in.expect("static", 4);
        if (in.count(f[1]) != k) in.fail("static features out of order");
        const auto g = parse_group(f[3]);
        if (!g) in.fail("unknown group '" + f[3] + "'");
        features.push_back({f[2], *g});
    }
    try {
        ck.catalog = FeatureCatalog(std::move(features));
    } catch (const ContractViolation& e) {
        in.fail(e.what());
    }
    auto& s = ck.standardizer;
    s.static_names = ck.catalog.names();
    for (std::size_t k = 0; k < nd; ++k) {
        auto f = in.expect("dynamic", 3);
        if (in.count(f[1]) != k) in.fail("dynamic features out of order");
        s.dynamic_names.push_back(f[2]);
    }
    auto read_stats = [&](std::string_view kind, std::size_t n, std::vector<ColumnStats>& dst) {
        for (std::size_t k = 0; k < n; ++k) {
            auto f = in.expect("stats", 5);
            if (f[1] != kind || in.count(f[2]) != k)
                in.fail("expected 'stats " + std::string(kind) + " " + std::to_string(k) + "'");
            dst.push_back({in.number(f[3]), in.number(f[4])});
        }
    };
    read_stats("static", ns, s.statics);
    read_stats("dynamic", nd, s.dynamic);
    auto dq = in.expect("stats", 4);
    if (dq[1] != "discharge") in.fail("expected 'stats discharge'");
    s.discharge = {in.number(dq[2]), in.number(dq[3])};

    ck.params.for_each([&](std::string_view name, std::span<double> t) {
        auto f = in.next();
        if (f.size() < 3 || f[0] != "tensor" || f[1] != name)
            in.fail("expected tensor '" + std::string(name) + "'");
        if (in.count(f[2]) != t.size() || f.size() != 3 + t.size())
            in.fail("tensor '" + std::string(name) + "' has wrong size");
        for (std::size_t k = 0; k < t.size(); ++k) t[k] = in.number(f[3 + k]);
    });
    in.expect("end", 1);
    if (!in.next().empty()) in.fail("trailing data after 'end'");
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return parse_checkpoint(read_file(path), path.string());
}

}  // namespace hydrosense
