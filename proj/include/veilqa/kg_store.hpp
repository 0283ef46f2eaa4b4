#pragma once
// Knowledge graph store.
//
// Two backends behind one interface: an in-memory triple index loaded from a
// tab-separated file, and a remote SPARQL endpoint driven by fixed query
// templates. Both serve the same neighbor queries:
//   - adjacent_relations: relations incident to an entity, per direction
//   - entity_cluster: neighbor entities for an (entity, relation) pair,
//     including flattened two-hop relations traversing a mediator node
//   - entity_name: surface name lookup, gated by a passkey so that only the
//     privacy layer can reach names
//
// Graphs are immutable after load; all result sets are deduplicated and
// lexicographically ordered.

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "veilqa/types.hpp"

namespace veilqa {

class Graph;
class PrivacyMap;
using GraphHandle = std::shared_ptr<const Graph>;

// Passkey for entity_name. Constructible only by the privacy layer, so a
// static review of call sites shows the LLM-facing modules cannot see names.
class NameAccess {
    NameAccess() = default;
    friend PrivacyMap build_privacy_map(const Graph& g);
    friend NameAccess name_access_for_tests();
};

struct GraphSource {
    std::string triples_path;             // TSV file, empty when remote
    std::string names_path;               // optional sidecar (mid\tname)
    std::string endpoint_url;             // SPARQL endpoint, empty when file-backed
    std::vector<std::string> cvt_relation_prefixes;
};

class Graph {
public:
    virtual ~Graph() = default;

    virtual std::vector<Relation> adjacent_relations(const Mid& e, Direction d) const = 0;
    virtual std::vector<Mid> entity_cluster(const Mid& e, const Relation& r, Direction d) const = 0;
    virtual std::size_t triple_count() const = 0;

    std::optional<std::string> entity_name(const Mid& e, NameAccess) const {
        return lookup_name(e);
    }

    const std::vector<std::string>& cvt_relation_prefixes() const { return cvt_prefixes_; }

protected:
    virtual std::optional<std::string> lookup_name(const Mid& e) const = 0;
    std::vector<std::string> cvt_prefixes_;
};

class InMemoryGraph final : public Graph {
public:
    std::vector<Relation> adjacent_relations(const Mid& e, Direction d) const override;
    std::vector<Mid> entity_cluster(const Mid& e, const Relation& r, Direction d) const override;
    std::size_t triple_count() const override { return triples_.size(); }

    // Triples hold MIDs and relations only; names stay private to the
    // privacy layer.
    const std::vector<Triplet>& triples() const { return triples_; }

private:
    std::optional<std::string> lookup_name(const Mid& e) const override;

    std::vector<Triplet> triples_;  // sorted, deduplicated
    std::map<Mid, std::vector<std::size_t>> by_head_;
    std::map<Mid, std::vector<std::size_t>> by_tail_;
    std::map<Mid, std::string> names_;

    friend GraphHandle load_graph(const GraphSource& source);
    friend GraphHandle flatten_cvt(const GraphHandle& g);
    friend PrivacyMap build_privacy_map(const Graph& g);
    friend InMemoryGraph make_graph_for_tests(std::vector<Triplet> triples,
                                              std::map<Mid, std::string> names,
                                              std::vector<std::string> cvt_prefixes);
};

// Remote backend speaking the HTTP SPARQL protocol. Every query is one of the
// fixed templates in sparql_templates(), slot-filled with a mid/relation.
class RemoteGraph final : public Graph {
public:
    RemoteGraph(std::string endpoint_url, std::vector<std::string> cvt_prefixes);

    std::vector<Relation> adjacent_relations(const Mid& e, Direction d) const override;
    std::vector<Mid> entity_cluster(const Mid& e, const Relation& r, Direction d) const override;
    std::size_t triple_count() const override { return 0; }  // unknown for remote

private:
    std::optional<std::string> lookup_name(const Mid& e) const override;
    std::vector<std::string> query(const std::string& sparql) const;

    std::string host_;
    std::string path_;
};

struct SparqlTemplates {
    std::string relations_head;    // relations where the entity is subject
    std::string relations_tail;    // relations where the entity is object
    std::string cluster_head;      // tail entities of (e, r, ?x)
    std::string cluster_tail;      // head entities of (?x, r, e)
    std::string cluster_head_2hop; // ?x via (e, r1, ?m)(?m, r2, ?x)
    std::string cluster_tail_2hop; // ?x via (?x, r1, ?m)(?m, r2, e)
    std::string entity_name;
};

// The fixed query templates, with {mid} / {r} / {r1} / {r2} slots.
const SparqlTemplates& sparql_templates();

// Renders a template by filling its slots. Exposed for the differential and
// snapshot tests; remote queries are built exclusively through this.
std::string render_sparql(const std::string& tmpl, const Mid& mid, const Relation& r1 = "",
                          const Relation& r2 = "");

// Loads a graph. File sources read UTF-8 "head\trelation\ttail" lines,
// skipping blank and '#'-prefixed lines; "type.object.name" rows feed the
// name store instead of the triple index. Throws GraphError on unreadable
// sources, malformed lines (with line number) and empty graphs.
GraphHandle load_graph(const GraphSource& source);

// Rewrites every (a, r1, cvt)(cvt, r2, b) chain whose r1 matches a configured
// CVT prefix into (a, "r1|r2", b). The output contains no CVT endpoints and
// the rewrite is idempotent. Identity when no prefixes are configured.
GraphHandle flatten_cvt(const GraphHandle& g);

// Test hooks (defined in src for the builder, in test support for the key).
InMemoryGraph make_graph_for_tests(std::vector<Triplet> triples,
                                   std::map<Mid, std::string> names,
                                   std::vector<std::string> cvt_prefixes);
NameAccess name_access_for_tests();

}  // namespace veilqa
