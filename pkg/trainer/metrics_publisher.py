"""
MQTT publisher for live training metrics

Publishes one JSON message per finished epoch to
{GSGD_MQTT_TOPIC_PREFIX}/{run_id}/epoch. Disabled while GSGD_MQTT_BROKER_HOST
is empty. Broker trouble is logged and never interrupts a run.
"""
import json
import logging
import threading
import time
from datetime import datetime

import paho.mqtt.client as mqtt
from django.conf import settings

from .engine import EpochMetrics

logger = logging.getLogger(__name__)


class MetricsMQTTPublisher:
    """Publishes per-epoch metrics rows to an MQTT broker"""

    def __init__(self):
        self.broker_host = settings.GSGD_MQTT_BROKER_HOST
        self.broker_port = settings.GSGD_MQTT_BROKER_PORT
        self.username = settings.GSGD_MQTT_USERNAME
        self.password = settings.GSGD_MQTT_PASSWORD
        self.topic_prefix = settings.GSGD_MQTT_TOPIC_PREFIX.rstrip('/')
        self.qos = 1
        self.client = None
        self.connected = False
        self.flush_timeout = settings.GSGD_MQTT_FLUSH_TIMEOUT
        self._pending = []
        self._lock = threading.RLock()

    @property
    def enabled(self) -> bool:
        return bool(self.broker_host)

    def connect(self):
        """Connect to MQTT broker, replacing any previous client"""
        with self._lock:
            self._release_client()
            self._connect()

    def _release_client(self):
        if self.client is None:
            return
        client, self.client = self.client, None
        self.connected = False
        self._pending = []
        try:
            client.disconnect()
            client.loop_stop()
        except Exception as e:
            logger.warning(f"[MQTT] Error releasing previous client: {e}")

    def _connect(self):
        try:
            self.client = mqtt.Client(
                callback_api_version=mqtt.CallbackAPIVersion.VERSION2,
                client_id=f"gsgd_metrics_{datetime.now().timestamp()}",
            )
            if self.username:
                self.client.username_pw_set(self.username, self.password)

            self.client.on_connect = self._on_connect
            self.client.on_disconnect = self._on_disconnect

            logger.info(f"[MQTT] Connecting to {self.broker_host}:{self.broker_port}")
            self.client.connect(self.broker_host, self.broker_port, 60)
            self.client.loop_start()
            # publish() queues until the network loop has connected
            self.connected = True

        except Exception as e:
            logger.error(f"[MQTT] Connection error: {e}")
            self.connected = False

    def _on_connect(self, client, userdata, flags, reason_code, properties):
        if reason_code == 0:
            self.connected = True
            logger.info("[MQTT] Connected successfully")
        else:
            self.connected = False
            logger.error(f"[MQTT] Connection failed with code {reason_code}")

    def _on_disconnect(self, client, userdata, flags, reason_code, properties):
        self.connected = False
        if reason_code != 0:
            logger.warning(f"[MQTT] Unexpected disconnection (code {reason_code})")

    def topic(self, run_id: str) -> str:
        return f"{self.topic_prefix}/{run_id}/epoch"

    def publish_epoch(self, run_id: str, row: EpochMetrics) -> bool:
        """Publish one epoch row; returns False when it could not be sent"""
        if not self.enabled:
            return False

        payload = {
            'run_id': run_id,
            'epoch': row.epoch,
            'train_loss': row.train_loss,
            'val_loss': row.val_loss,
            'val_accuracy': row.val_accuracy,
            'updates': row.updates,
            'replays': row.replays,
            'mean_staleness': row.mean_staleness,
        }
        with self._lock:
            if not self.connected:
                self.connect()
            if not self.connected:
                logger.error("[MQTT] Cannot publish - not connected to broker")
                return False
            try:
                result = self.client.publish(self.topic(run_id), json.dumps(payload), qos=self.qos)
            except Exception as e:
                logger.error(f"[MQTT] Error publishing epoch {row.epoch} of {run_id}: {e}")
                return False
            if result.rc != mqtt.MQTT_ERR_SUCCESS:
                logger.error(f"[MQTT] Publish failed with code {result.rc}")
                return False
            self._pending = [info for info in self._pending if not info.is_published()] + [result]
        logger.debug(f"[MQTT] Published epoch {row.epoch} to {self.topic(run_id)}")
        return True

    def epoch_callback(self, run_id: str):
        """Callback suitable for the engine's on_epoch hook"""
        return lambda row: self.publish_epoch(run_id, row)

    def disconnect(self):
        """Wait up to flush_timeout for queued messages, then stop the client"""
        with self._lock:
            if self.client is None:
                return
            deadline = time.monotonic() + self.flush_timeout
            for info in self._pending:
                if info.is_published():
                    continue
                try:
                    info.wait_for_publish(max(0.0, deadline - time.monotonic()))
                except Exception as e:
                    logger.warning(f"[MQTT] Message not delivered before disconnect: {e}")
            unsent = sum(1 for info in self._pending if not info.is_published())
            if unsent:
                logger.warning(f"[MQTT] Dropping {unsent} unacknowledged message(s)")
            self._release_client()
            logger.info("[MQTT] Disconnected")


_publisher_instance = None


def get_metrics_publisher() -> MetricsMQTTPublisher:
    """Get or create the global publisher instance"""
    global _publisher_instance

    if _publisher_instance is None:
        _publisher_instance = MetricsMQTTPublisher()

    return _publisher_instance
