#include "tadbench/metrics.hpp"

#include <charconv>

#include "tadbench/error.hpp"
#include "tadbench/io_util.hpp"

namespace tad {

namespace {

std::size_t clean_correct_count(const std::vector<EpisodeRecord>& records) {
    std::size_t n = 0;
    for (const auto& r : records)
        if (r.clean_pred == static_cast<std::size_t>(r.y)) ++n;
    return n;
}

}  // namespace

double clean_accuracy(const std::vector<EpisodeRecord>& records) {
    if (records.empty()) throw NumericError("metrics: no records");
    return 100.0 * static_cast<double>(clean_correct_count(records)) /
           static_cast<double>(records.size());
}

double accuracy_under_attack(const std::vector<EpisodeRecord>& records) {
    if (records.empty()) throw NumericError("metrics: no records");
    std::size_t surviving = 0;
    for (const auto& r : records)
        if (r.clean_pred == static_cast<std::size_t>(r.y) && !r.success)
            ++surviving;
    return 100.0 * static_cast<double>(surviving) /
           static_cast<double>(records.size());
}

double attack_success_rate(const std::vector<EpisodeRecord>& records) {
    if (records.empty()) throw NumericError("metrics: no records");
    const std::size_t correct = clean_correct_count(records);
    if (correct == 0)
        throw NumericError("metrics: no clean-correct examples for Asr");
    std::size_t successes = 0;
    for (const auto& r : records)
        if (r.success) ++successes;
    return 100.0 * static_cast<double>(successes) / static_cast<double>(correct);
}

std::optional<double> avg_queries(const std::vector<EpisodeRecord>& records) {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& r : records) {
        if (!r.success) continue;
        total += static_cast<double>(r.queries);
        ++n;
    }
    if (n == 0) return std::nullopt;
    return total / static_cast<double>(n);
}

double pdr(double acc, double aua) {
    if (!(acc > 0.0)) throw NumericError("pdr: acc must be > 0");
    return 100.0 * (1.0 - aua / acc);
}

double apdr(const std::vector<double>& pdrs) {
    if (pdrs.empty()) throw NumericError("apdr: no values");
    double total = 0.0;
    for (double v : pdrs) total += v;
    return total / static_cast<double>(pdrs.size());
}

void check_full_coverage(const AttackedDataset& attacked) {
    if (attacked.records.size() < attacked.full_test_size &&
        !attacked.allow_subsample)
        throw ConfigError(
            "metrics: records cover " + std::to_string(attacked.records.size()) +
            " of " + std::to_string(attacked.full_test_size) +
            " test examples; pass --allow-subsample to evaluate anyway");
    if (attacked.records.size() > attacked.full_test_size)
        throw NumericError("metrics: more records than test examples");
}

EvalRecord make_eval_record(const std::string& dataset, const std::string& model,
                            const std::string& defence, const std::string& attack,
                            const AttackedDataset& attacked) {
    check_full_coverage(attacked);
    EvalRecord rec;
    rec.dataset = dataset;
    rec.model = model;
    rec.defence = defence;
    rec.attack = attack;
    rec.acc = clean_accuracy(attacked.records);
    rec.aua = accuracy_under_attack(attacked.records);
    rec.asr = attack_success_rate(attacked.records);
    rec.avgq = avg_queries(attacked.records);
    rec.pdr = pdr(rec.acc, rec.aua);
    return rec;
}

std::string eval_records_to_csv(const std::vector<EvalRecord>& records) {
    std::string out = "dataset,model,defence,attack,acc,aua,asr,avgq,pdr\n";
    std::vector<double> group_pdrs;
    auto flush_group = [&](const EvalRecord& head) {
        if (group_pdrs.empty()) return;
        out += join_csv_row({head.dataset, head.model, head.defence, "apdr",
                             format_double(head.acc), "", "", "",
                             format_double(apdr(group_pdrs))});
        group_pdrs.clear();
    };
    for (std::size_t i = 0; i < records.size(); ++i) {
        const EvalRecord& r = records[i];
        out += join_csv_row({r.dataset, r.model, r.defence, r.attack,
                             format_double(r.acc), format_double(r.aua),
                             format_double(r.asr),
                             r.avgq ? format_double(*r.avgq) : std::string(),
                             format_double(r.pdr)});
        group_pdrs.push_back(r.pdr);
        const bool last = i + 1 == records.size();
        if (last || records[i + 1].dataset != r.dataset ||
            records[i + 1].model != r.model || records[i + 1].defence != r.defence)
            flush_group(r);
    }
    return out;
}

namespace {

double parse_field_double(const std::string& field, const std::string& where) {
    double v = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end)
        throw ConfigError(where + ": bad numeric field '" + field + "'");
    return v;
}

}  // namespace

std::vector<EvalRecord> parse_eval_csv(const std::string& text,
                                       const std::string& origin) {
    const std::vector<std::string> lines = split_lines(text);
    if (lines.empty() || lines[0] != "dataset,model,defence,attack,acc,aua,asr,avgq,pdr")
        throw ConfigError(origin + ": missing eval CSV header");
    std::vector<EvalRecord> records;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string where = origin + ":" + std::to_string(i + 1);
        const std::vector<std::string> f = split_on(lines[i], ',');
        if (f.size() != 9) throw ConfigError(where + ": expected 9 fields");
        if (f[3] == "apdr") continue;
        EvalRecord r;
        r.dataset = f[0];
        r.model = f[1];
        r.defence = f[2];
        r.attack = f[3];
        r.acc = parse_field_double(f[4], where);
        r.aua = parse_field_double(f[5], where);
        r.asr = parse_field_double(f[6], where);
        if (!f[7].empty()) r.avgq = parse_field_double(f[7], where);
        r.pdr = parse_field_double(f[8], where);
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace tad
