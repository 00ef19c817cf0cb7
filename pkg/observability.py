"""
OpenTelemetry configuration and instrumentation setup.

Initializes a meter provider with the Prometheus reader and instruments the
Celery and Redis clients used by the distributed grid search.
"""

import logging

from opentelemetry import metrics as otel_metrics
from opentelemetry.exporter.prometheus import PrometheusMetricReader
from opentelemetry.instrumentation.celery import CeleryInstrumentor
from opentelemetry.instrumentation.redis import RedisInstrumentor
from opentelemetry.sdk.metrics import MeterProvider
from opentelemetry.sdk.resources import Resource

from config import ENVIRONMENT, OTEL_ENABLED, PROMETHEUS_PORT, SERVICE_NAME, SERVICE_VERSION

logger = logging.getLogger(__name__)

_meter_provider = None


def setup_opentelemetry():
    """Initialize OpenTelemetry with the Prometheus metrics reader (once per process)."""
    global _meter_provider

    if not OTEL_ENABLED:
        logger.info("OpenTelemetry disabled via OTEL_ENABLED env var")
        return None
    if _meter_provider is not None:
        return _meter_provider

    try:
        resource = Resource.create({
            "service.name": SERVICE_NAME,
            "service.version": SERVICE_VERSION,
            "deployment.environment": ENVIRONMENT,
        })
        _meter_provider = MeterProvider(resource=resource, metric_readers=[PrometheusMetricReader()])
        otel_metrics.set_meter_provider(_meter_provider)
        logger.info(f"OpenTelemetry initialized; worker exporter port {PROMETHEUS_PORT}")
        return _meter_provider
    except Exception as e:
        logger.error(f"Failed to initialize OpenTelemetry: {e}", exc_info=True)
        raise


def _instrument(name, instrumentor):
    try:
        instrumentor.instrument()
        logger.info(f"{name} instrumented with OpenTelemetry")
    except Exception as e:
        logger.error(f"Failed to instrument {name}: {e}", exc_info=True)


def instrument_clients():
    """Trace the Redis and Celery clients the distributed grid search talks through."""
    if not OTEL_ENABLED:
        logger.info("Celery and Redis instrumentation disabled")
        return
    _instrument("Redis", RedisInstrumentor())
    _instrument("Celery", CeleryInstrumentor())
