#ifndef ARPPS_ARPPS_H
#define ARPPS_ARPPS_H

#include <stddef.h>
#include <stdint.h>

#if defined(ARPPS_BUILDING_LIBRARY)
#define ARPPS_API __attribute__((visibility("default")))
#else
#define ARPPS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum arpps_status {
  ARPPS_OK = 0,
  ARPPS_ERR_INVALID_ARGUMENT = 1,
  ARPPS_ERR_DATA = 2,
  ARPPS_ERR_IO = 3,
  ARPPS_ERR_RUNTIME = 4
} arpps_status;

typedef struct arpps_store arpps_store;
typedef struct arpps_service arpps_service;

/* Message of the last failed call on this thread, "" if none. */
ARPPS_API const char* arpps_last_error(void);
ARPPS_API const char* arpps_version(void);

/* Strings returned through char** out parameters are owned by the caller. */
ARPPS_API void arpps_string_free(char* s);

/* Configs and reports are JSON text. A NULL or empty config means defaults.
   NULL out pointers of the run functions are skipped. */

ARPPS_API arpps_status arpps_generate(const char* config_json, char** report_json,
                                      char** points_csv, char** lines_csv);
/* ARPPS_OK with a report even when the network has violations; ARPPS_ERR_DATA
   when the CSV does not parse. */
ARPPS_API arpps_status arpps_validate(const char* points_csv, const char* lines_csv,
                                      char** report_json);

ARPPS_API arpps_status arpps_store_open_csv(const char* points_csv, const char* lines_csv,
                                            uint64_t epoch, arpps_store** out);
ARPPS_API arpps_status arpps_store_open_snapshot(const char* path, arpps_store** out);
ARPPS_API arpps_status arpps_store_save_snapshot(const arpps_store* store, const char* path);
ARPPS_API void arpps_store_free(arpps_store* store);
ARPPS_API arpps_status arpps_store_counts(const arpps_store* store, size_t* points, size_t* lines);
/* lon_min, lat_min, lon_max, lat_max. */
ARPPS_API arpps_status arpps_store_extent(const arpps_store* store, double out[4]);
ARPPS_API arpps_status arpps_store_query(const arpps_store* store, const double bbox[4],
                                         char** geojson);
/* Same status and body as GET /pipes?range=<range>. */
ARPPS_API arpps_status arpps_store_query_range(const arpps_store* store, const char* range,
                                               int* http_status, char** body);

ARPPS_API arpps_status arpps_bbox_from_fix(double lon, double lat, double radius_m, double out[4]);

typedef void (*arpps_log_fn)(const char* line, void* user);

/* The service keeps its own reference to the store's data. port 0 picks a
   free port. log may be NULL. */
ARPPS_API arpps_status arpps_service_start(const arpps_store* store, const char* address, int port,
                                           arpps_log_fn log, void* user, arpps_service** out);
ARPPS_API int arpps_service_port(const arpps_service* service);
/* Stops and frees. */
ARPPS_API void arpps_service_stop(arpps_service* service);

ARPPS_API arpps_status arpps_match_bench(const char* config_json, char** report_json);
/* store may be NULL; frames_jsonl (may be NULL) receives one overlay frame
   per line when a store is given. */
ARPPS_API arpps_status arpps_track_sim(const char* config_json, const arpps_store* store,
                                       char** report_json, char** frames_jsonl);
ARPPS_API arpps_status arpps_render_frame(const arpps_store* store, const char* config_json,
                                          char** frame_json, char** svg);

#ifdef __cplusplus
}
#endif

#endif
