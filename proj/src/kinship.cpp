#include "duet/kinship.hpp"

#include <array>
#include <fstream>

namespace duet {

namespace {

using Row = std::array<std::string, 3>;

struct Builder {
    std::vector<Row> base, derived;

    void fact(std::vector<Row>& dst, const std::string& h, const std::string& r,
              const std::string& t) {
        dst.push_back({h, r, t});
    }
};

void build_family(Builder& b, const std::string& fam, Rng& rng) {
    const std::string gf = fam + "_gf", gm = fam + "_gm";
    b.fact(b.base, gf, "spouse_of", gm);
    b.fact(b.base, gm, "spouse_of", gf);

    std::vector<std::vector<std::string>> kid_groups;
    std::vector<std::string> middle;  // blood children of the grandparents
    for (int c = 1; c <= 2; ++c) {
        const std::string child = fam + "_c" + std::to_string(c);
        const std::string spouse = fam + "_s" + std::to_string(c);
        middle.push_back(child);
        b.fact(b.base, gf, "parent_of", child);
        b.fact(b.base, gm, "parent_of", child);
        b.fact(b.base, child, "spouse_of", spouse);
        b.fact(b.base, spouse, "spouse_of", child);

        const size_t n_kids = 1 + rng.below(3);
        std::vector<std::string> kids;
        for (size_t k = 1; k <= n_kids; ++k) {
            const std::string kid = fam + "_c" + std::to_string(c) + "k" + std::to_string(k);
            kids.push_back(kid);
            b.fact(b.base, child, "parent_of", kid);
            b.fact(b.base, spouse, "parent_of", kid);
            b.fact(b.derived, gf, "grandparent_of", kid);
            b.fact(b.derived, gm, "grandparent_of", kid);
        }
        for (const auto& a : kids)
            for (const auto& c2 : kids)
                if (a != c2) b.fact(b.derived, a, "sibling_of", c2);
        kid_groups.push_back(std::move(kids));
    }
    b.fact(b.derived, middle[0], "sibling_of", middle[1]);
    b.fact(b.derived, middle[1], "sibling_of", middle[0]);
    for (const auto& kid : kid_groups[1]) b.fact(b.derived, middle[0], "aunt_uncle_of", kid);
    for (const auto& kid : kid_groups[0]) b.fact(b.derived, middle[1], "aunt_uncle_of", kid);
}

void write_rows(const std::filesystem::path& file, const std::vector<Row>& rows) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw DataError("cannot write " + file.string());
    for (const auto& r : rows) out << r[0] << '\t' << r[1] << '\t' << r[2] << '\n';
}

}  // namespace

KinshipData make_kinship(const KinshipOptions& opts) {
    Rng rng(opts.seed);
    Builder b;
    for (size_t f = 0; f < opts.families; ++f) build_family(b, "f" + std::to_string(f), rng);

    rng.shuffle(b.derived);
    const size_t n_test = static_cast<size_t>(opts.test_fraction * b.derived.size());
    const size_t n_valid = static_cast<size_t>(opts.valid_fraction * b.derived.size());

    KinshipData data;
    data.test.assign(b.derived.begin(), b.derived.begin() + n_test);
    data.valid.assign(b.derived.begin() + n_test, b.derived.begin() + n_test + n_valid);
    data.train = b.base;
    data.train.insert(data.train.end(), b.derived.begin() + n_test + n_valid, b.derived.end());
    return data;
}

void write_kinship_dataset(const std::filesystem::path& dir, const KinshipOptions& opts) {
    std::filesystem::create_directories(dir);
    const KinshipData data = make_kinship(opts);
    write_rows(dir / "train.txt", data.train);
    write_rows(dir / "valid.txt", data.valid);
    write_rows(dir / "test.txt", data.test);
}

void write_kinship_inductive(const std::filesystem::path& dir, const KinshipOptions& train_opts,
                             const KinshipOptions& test_opts) {
    std::filesystem::create_directories(dir);
    const KinshipData train_side = make_kinship(train_opts);
    write_rows(dir / "train.txt", train_side.train);
    write_rows(dir / "valid.txt", train_side.valid);

    // Disjoint entity universe: same structure, fresh family names.
    Rng rng(test_opts.seed);
    Builder b;
    for (size_t f = 0; f < test_opts.families; ++f) build_family(b, "t" + std::to_string(f), rng);
    rng.shuffle(b.derived);
    const size_t n_test = static_cast<size_t>(test_opts.test_fraction * b.derived.size());
    std::vector<Row> facts = b.base;
    facts.insert(facts.end(), b.derived.begin() + n_test, b.derived.end());
    write_rows(dir / "facts.txt", facts);
    write_rows(dir / "test.txt", {b.derived.begin(), b.derived.begin() + n_test});
}

}  // namespace duet
