import { describe, expect, it } from "vitest";

import { exploreEntity } from "../src/explore.js";
import {
  HAS_METHOD,
  HAS_STEP,
  OA_HAS_BODY,
  OA_HAS_SOURCE,
  OA_HAS_TARGET,
  RDFS_LABEL,
  REQUIRES,
} from "../src/sparql.js";
import { ex, iri, lit, MiniFederation, type TripleLike } from "./helpers.js";

function venueNeighborhoodTriples(): TripleLike[] {
  return [
    [iri(ex("organise_conference")), iri(HAS_STEP), iri(ex("choose_venue"))],
    [iri(ex("organise_conference")), iri(HAS_STEP), iri(ex("send_invites"))],
    [iri(ex("choose_venue")), iri(HAS_STEP), iri(ex("visit_candidates"))],
    [iri(ex("choose_venue")), iri(HAS_METHOD), iri(ex("hire_agency"))],
    [iri(ex("choose_venue")), iri(REQUIRES), iri(ex("budget"))],
    [iri(ex("send_invites")), iri(REQUIRES), iri(ex("choose_venue"))],
    [iri(ex("alt_plan")), iri(HAS_METHOD), iri(ex("choose_venue"))],
    [iri(ex("choose_venue")), iri(RDFS_LABEL), lit("Choose a venue")],
    [iri(ex("ann1")), iri(OA_HAS_BODY), iri(ex("choose_venue"))],
    [iri(ex("ann1")), iri(OA_HAS_TARGET), iri(ex("ann1_target"))],
    [iri(ex("ann1_target")), iri(OA_HAS_SOURCE), iri("http://wiki.example/venues")],
  ];
}

describe("exploreEntity", () => {
  it("collects every relation of the neighborhood", async () => {
    const fed = new MiniFederation();
    fed.add("all", venueNeighborhoodTriples());
    const n = await exploreEntity(fed.infos(), ex("choose_venue"), fed.fetchFn);
    expect(n.steps).toEqual([ex("visit_candidates")]);
    expect(n.partOf).toEqual([ex("organise_conference")]);
    expect(n.requires).toEqual([ex("budget")]);
    expect(n.requiredBy).toEqual([ex("send_invites")]);
    expect(n.methods).toEqual([ex("hire_agency")]);
    expect(n.methodOf).toEqual([ex("alt_plan")]);
    expect(n.labels).toEqual(["Choose a venue"]);
    expect(n.annotations).toEqual(["http://wiki.example/venues"]);
    expect(n.responded).toEqual(["all"]);
  });

  it("sees the same neighborhood whether triples are merged or split across endpoints", async () => {
    const merged = new MiniFederation();
    merged.add("all", venueNeighborhoodTriples());
    const single = await exploreEntity(merged.infos(), ex("choose_venue"), merged.fetchFn);

    const split = new MiniFederation();
    const triples = venueNeighborhoodTriples();
    split.add("odd", triples.filter((_, i) => i % 2 === 1));
    split.add("even", triples.filter((_, i) => i % 2 === 0));
    const federated = await exploreEntity(split.infos(), ex("choose_venue"), split.fetchFn);

    const view = ({ responded: _r, ...rest }: typeof single) => rest;
    expect(view(federated)).toEqual(view(single));
  });

  it("uses the annotation target itself when it has no source", async () => {
    const fed = new MiniFederation();
    fed.add("all", [
      [iri(ex("ann2")), iri(OA_HAS_BODY), iri(ex("task"))],
      [iri(ex("ann2")), iri(OA_HAS_TARGET), iri("http://page.example/direct")],
    ]);
    const n = await exploreEntity(fed.infos(), ex("task"), fed.fetchFn);
    expect(n.annotations).toEqual(["http://page.example/direct"]);
  });

  it("returns all-empty sections for an undescribed entity", async () => {
    const fed = new MiniFederation();
    fed.add("all", venueNeighborhoodTriples());
    const n = await exploreEntity(fed.infos(), ex("nothing_here"), fed.fetchFn);
    expect(n.steps).toEqual([]);
    expect(n.partOf).toEqual([]);
    expect(n.requires).toEqual([]);
    expect(n.requiredBy).toEqual([]);
    expect(n.methods).toEqual([]);
    expect(n.methodOf).toEqual([]);
    expect(n.labels).toEqual([]);
    expect(n.annotations).toEqual([]);
  });

  it("tracks endpoints that failed part of the exploration", async () => {
    const fed = new MiniFederation();
    fed.add("good", venueNeighborhoodTriples());
    fed.add("bad").mode = "down";
    const n = await exploreEntity(fed.infos(), ex("choose_venue"), fed.fetchFn);
    expect(n.responded).toEqual(["good"]);
    expect(n.failed.map((f) => f.name)).toEqual(["bad"]);
    expect(n.steps).toEqual([ex("visit_candidates")]);
  });
});
