#include <stdio.h>
#include <string.h>
#include "orbitsiege.h"

int main(int argc, char **argv) {
    if (argc != 2) return 2;
    OsgScenario *scenario = NULL;
    if (osg_scenario_load(argv[1], &scenario) != OSG_STATUS_OK) {
        fprintf(stderr, "%s\n", osg_last_error_message());
        return 1;
    }
    OsgStrategy *strategy = NULL;
    if (osg_plan_delay(scenario, NULL, 0, 5, &strategy) != OSG_STATUS_OK) {
        fprintf(stderr, "%s\n", osg_last_error_message());
        return 1;
    }
    size_t slots[8];
    size_t n = 0;
    osg_strategy_slots(strategy, slots, 8, &n);
    OsgEvacuation fate;
    osg_strategy_outcome(strategy, 0, &fate);
    printf("slots");
    for (size_t i = 0; i < n; i++) printf(" %zu", slots[i]);
    printf("\ncost %llu\n", (unsigned long long)osg_strategy_cost(strategy));
    printf("fate %d %zu\n", (int)fate.kind, fate.slot);

    OsgScenario *bad = NULL;
    int status = osg_scenario_load("/nonexistent.json", &bad);
    printf("missing %d %d\n", status, strstr(osg_last_error_message(), "nonexistent") != NULL);

    osg_strategy_free(strategy);
    osg_scenario_free(scenario);
    return 0;
}
